#include "bundleforge/milp.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <queue>
#include <sstream>

namespace bundleforge::milp {

std::size_t Problem::add_var(double c, double lo, double hi, bool is_int, std::string name) {
    cost.push_back(c);
    lower.push_back(lo);
    upper.push_back(hi);
    integer.push_back(is_int);
    var_names.push_back(std::move(name));
    return cost.size() - 1;
}

const char* to_string(Status s) {
    switch (s) {
        case Status::Optimal: return "optimal";
        case Status::Infeasible: return "infeasible";
        case Status::Unbounded: return "unbounded";
        case Status::NodeLimit: return "node_limit";
    }
    return "?";
}

namespace {

// Column-major standard form: A x = 0 over structural vars and one slack per
// row (a_i x - s_i = 0, s_i in [lo_i, hi_i]), plus one artificial per row.
// Structural and slack columns are built once per problem and shared.
struct Columns {
    explicit Columns(const Problem& p) : cols(p.num_vars() + p.rows.size()) {
        const std::size_t n = p.num_vars();
        for (std::size_t i = 0; i < p.rows.size(); ++i) {
            for (const auto& [v, c] : p.rows[i].terms) {
                if (c != 0.0) cols[v].push_back({i, c});
            }
            cols[n + i].push_back({i, -1.0});
        }
    }
    std::vector<std::vector<std::pair<std::size_t, double>>> cols;
};

class Simplex {
public:
    Simplex(const Problem& p, const Columns& columns, const std::vector<double>& lower,
            const std::vector<double>& upper, double tol, const std::vector<double>* hint = nullptr)
        : tol_(tol), m_(p.rows.size()), n_struct_(p.num_vars()), shared_(columns.cols), hint_(hint) {
        n_ = n_struct_ + 2 * m_;
        art_sign_.assign(m_, 1.0);
        lo_.resize(n_);
        up_.resize(n_);
        cost_.assign(n_, 0.0);
        for (std::size_t j = 0; j < n_struct_; ++j) {
            lo_[j] = lower[j];
            up_[j] = upper[j];
            cost_[j] = p.cost[j];
        }
        for (std::size_t i = 0; i < m_; ++i) {
            lo_[n_struct_ + i] = p.rows[i].lo;
            up_[n_struct_ + i] = p.rows[i].hi;
        }
    }

    LpResult run() {
        LpResult res;
        for (std::size_t j = 0; j < n_struct_ + m_; ++j) {
            if (lo_[j] > up_[j] + tol_) return res;  // empty box
        }
        x_.assign(n_, 0.0);
        for (std::size_t j = 0; j < n_struct_ + m_; ++j) {
            if (std::isfinite(lo_[j])) x_[j] = lo_[j];
            else if (std::isfinite(up_[j])) x_[j] = up_[j];
            else x_[j] = 0.0;
            // crash start: nearest bound to the hinted value
            if (hint_ && j < n_struct_ && std::isfinite(lo_[j]) && std::isfinite(up_[j]) &&
                (*hint_)[j] - lo_[j] > up_[j] - (*hint_)[j]) {
                x_[j] = up_[j];
            }
        }
        // residual r = -A x_N ; artificial column sign(r_i) e_i
        std::vector<double> r(m_, 0.0);
        for (std::size_t j = 0; j < n_struct_ + m_; ++j) {
            if (x_[j] == 0.0) continue;
            for (const auto& [i, c] : shared_[j]) r[i] -= c * x_[j];
        }
        basis_.resize(m_);
        is_basic_.assign(n_, -1);
        for (std::size_t i = 0; i < m_; ++i) {
            std::size_t a = n_struct_ + m_ + i;
            art_sign_[i] = r[i] >= 0.0 ? 1.0 : -1.0;
            lo_[a] = 0.0;
            up_[a] = kInf;
            x_[a] = std::abs(r[i]);
            basis_[i] = a;
            is_basic_[a] = static_cast<int>(i);
        }
        refactor();

        // phase 1
        std::vector<double> phase1(n_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) phase1[n_struct_ + m_ + i] = 1.0;
        Status st = iterate(phase1, res.iterations);
        if (st == Status::Unbounded) {
            res.status = Status::Infeasible;  // cannot happen for phase 1, but stay safe
            return res;
        }
        double infeas = 0.0;
        for (std::size_t i = 0; i < m_; ++i) infeas += x_[n_struct_ + m_ + i];
        if (infeas > 1e-7 * std::max(1.0, scale())) {
            res.status = Status::Infeasible;
            return res;
        }
        for (std::size_t i = 0; i < m_; ++i) {
            std::size_t a = n_struct_ + m_ + i;
            up_[a] = 0.0;
            if (is_basic_[a] < 0) x_[a] = 0.0;
        }
        st = iterate(cost_, res.iterations);
        if (st == Status::Unbounded) {
            res.status = Status::Unbounded;
            return res;
        }
        res.status = Status::Optimal;
        res.x.assign(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n_struct_));
        for (std::size_t j = 0; j < n_struct_; ++j) {
            // clean tiny drift against bounds
            if (std::abs(res.x[j] - lo_[j]) < 1e-11) res.x[j] = lo_[j];
            if (std::abs(res.x[j] - up_[j]) < 1e-11) res.x[j] = up_[j];
        }
        double obj = 0.0;
        for (std::size_t j = 0; j < n_struct_; ++j) obj += cost_[j] * res.x[j];
        res.objective = obj;
        return res;
    }

private:
    template <class F>
    void for_col(std::size_t j, F&& f) const {
        if (j < n_struct_ + m_) {
            for (const auto& [i, c] : shared_[j]) f(i, c);
        } else {
            f(j - n_struct_ - m_, art_sign_[j - n_struct_ - m_]);
        }
    }

    double scale() const {
        double s = 0.0;
        for (std::size_t j = 0; j < n_struct_ + m_; ++j) {
            if (std::isfinite(x_[j])) s = std::max(s, std::abs(x_[j]));
        }
        return s;
    }

    // Binv from scratch by Gauss-Jordan with partial pivoting; then x_B.
    void refactor() {
        std::vector<double> B(m_ * m_, 0.0);
        for (std::size_t k = 0; k < m_; ++k) {
            for_col(basis_[k], [&](std::size_t i, double c) { B[i * m_ + k] = c; });
        }
        binv_.assign(m_ * m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) binv_[i * m_ + i] = 1.0;
        for (std::size_t c = 0; c < m_; ++c) {
            std::size_t piv = c;
            for (std::size_t r = c + 1; r < m_; ++r) {
                if (std::abs(B[r * m_ + c]) > std::abs(B[piv * m_ + c])) piv = r;
            }
            if (piv != c) {
                for (std::size_t k = 0; k < m_; ++k) {
                    std::swap(B[c * m_ + k], B[piv * m_ + k]);
                    std::swap(binv_[c * m_ + k], binv_[piv * m_ + k]);
                }
            }
            double d = B[c * m_ + c];
            for (std::size_t k = 0; k < m_; ++k) {
                B[c * m_ + k] /= d;
                binv_[c * m_ + k] /= d;
            }
            for (std::size_t r = 0; r < m_; ++r) {
                if (r == c) continue;
                double f = B[r * m_ + c];
                if (f == 0.0) continue;
                for (std::size_t k = 0; k < m_; ++k) {
                    B[r * m_ + k] -= f * B[c * m_ + k];
                    binv_[r * m_ + k] -= f * binv_[c * m_ + k];
                }
            }
        }
        // x_B = Binv * (-N x_N)
        std::vector<double> rhs(m_, 0.0);
        for (std::size_t j = 0; j < n_; ++j) {
            if (is_basic_[j] >= 0 || x_[j] == 0.0) continue;
            for_col(j, [&](std::size_t i, double c) { rhs[i] -= c * x_[j]; });
        }
        for (std::size_t r = 0; r < m_; ++r) {
            double v = 0.0;
            for (std::size_t k = 0; k < m_; ++k) v += binv_[r * m_ + k] * rhs[k];
            x_[basis_[r]] = v;
        }
        pivots_since_refactor_ = 0;
    }

    Status iterate(const std::vector<double>& cost, std::size_t& iterations) {
        std::vector<double> y(m_), alpha(m_);
        int degenerate_run = 0;
        const std::size_t max_iter = 50 * (n_ + m_) + 1000;
        for (std::size_t it = 0; it < max_iter; ++it) {
            // duals y^T = c_B^T Binv
            for (std::size_t k = 0; k < m_; ++k) {
                double v = 0.0;
                for (std::size_t r = 0; r < m_; ++r) v += cost[basis_[r]] * binv_[r * m_ + k];
                y[k] = v;
            }
            // pricing
            bool bland = degenerate_run > 20;
            std::size_t enter = n_;
            double best = 0.0;
            int dir = 0;
            for (std::size_t j = 0; j < n_; ++j) {
                if (is_basic_[j] >= 0) continue;
                if (lo_[j] == up_[j]) continue;
                double d = cost[j];
                for_col(j, [&](std::size_t i, double c) { d -= y[i] * c; });
                bool can_up = x_[j] < up_[j] - tol_;
                bool can_down = x_[j] > lo_[j] + tol_;
                int dj = 0;
                if (d < -tol_ && can_up) dj = 1;
                else if (d > tol_ && can_down) dj = -1;
                if (dj == 0) continue;
                if (bland) {
                    enter = j;
                    dir = dj;
                    break;
                }
                if (std::abs(d) > best) {
                    best = std::abs(d);
                    enter = j;
                    dir = dj;
                }
            }
            if (enter == n_) return Status::Optimal;

            // alpha = Binv A_enter
            std::fill(alpha.begin(), alpha.end(), 0.0);
            for_col(enter, [&](std::size_t i, double c) {
                for (std::size_t r = 0; r < m_; ++r) alpha[r] += binv_[r * m_ + i] * c;
            });
            // ratio test; basic x_B changes by -dir * t * alpha
            double t_max = up_[enter] - lo_[enter];
            std::size_t leave = m_;
            double leave_alpha = 0.0;
            for (std::size_t r = 0; r < m_; ++r) {
                double a = dir * alpha[r];
                if (std::abs(a) <= 1e-11) continue;
                std::size_t b = basis_[r];
                double t;
                if (a > 0) {
                    if (!std::isfinite(lo_[b])) continue;
                    t = (x_[b] - lo_[b]) / a;
                } else {
                    if (!std::isfinite(up_[b])) continue;
                    t = (up_[b] - x_[b]) / (-a);
                }
                if (t < 0) t = 0;
                bool take = false;
                if (t < t_max - 1e-12) {
                    take = true;
                } else if (leave != m_ && t <= t_max + 1e-12) {
                    // tie between rows; a tie with the bound flip keeps the flip
                    take = bland ? b < basis_[leave] : std::abs(a) > std::abs(leave_alpha);
                }
                if (take) {
                    t_max = std::min(t, t_max);
                    leave = r;
                    leave_alpha = a;
                }
            }
            if (!std::isfinite(t_max)) return Status::Unbounded;
            ++iterations;
            degenerate_run = t_max <= 1e-12 ? degenerate_run + 1 : 0;

            x_[enter] += dir * t_max;
            for (std::size_t r = 0; r < m_; ++r) x_[basis_[r]] -= dir * t_max * alpha[r];

            if (leave == m_) {
                // bound flip
                x_[enter] = dir > 0 ? up_[enter] : lo_[enter];
                continue;
            }
            std::size_t out = basis_[leave];
            x_[out] = leave_alpha > 0 ? lo_[out] : up_[out];
            // pivot Binv on row `leave`
            double piv = alpha[leave];
            for (std::size_t k = 0; k < m_; ++k) binv_[leave * m_ + k] /= piv;
            for (std::size_t r = 0; r < m_; ++r) {
                if (r == leave || alpha[r] == 0.0) continue;
                double f = alpha[r];
                for (std::size_t k = 0; k < m_; ++k) binv_[r * m_ + k] -= f * binv_[leave * m_ + k];
            }
            is_basic_[out] = -1;
            basis_[leave] = enter;
            is_basic_[enter] = static_cast<int>(leave);
            if (++pivots_since_refactor_ >= 64) refactor();
        }
        return Status::Optimal;  // iteration cap; current point is primal feasible for phase 2
    }

    double tol_;
    std::size_t m_, n_struct_, n_ = 0;
    const std::vector<std::vector<std::pair<std::size_t, double>>>& shared_;
    const std::vector<double>* hint_;
    std::vector<double> art_sign_, lo_, up_, cost_, x_, binv_;
    std::vector<std::size_t> basis_;
    std::vector<int> is_basic_;
    int pivots_since_refactor_ = 0;
};

struct Node {
    double bound;
    std::size_t depth;
    std::uint64_t seq;
    std::vector<std::pair<std::size_t, double>> fixings;  // var -> fixed value
    std::vector<double> hint;                             // parent LP solution
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        // priority_queue pops the "largest"; we want smallest bound, then deepest, then oldest
        if (a.bound != b.bound) return a.bound > b.bound;
        if (a.depth != b.depth) return a.depth < b.depth;
        return a.seq > b.seq;
    }
};

// First-improvement 1-flip / 1-1 swap hill climb for pure 0/1 problems.
// Returns true when x was improved; x stays row-feasible throughout.
bool improve_binary(const Problem& p, std::vector<double>& x, double tol) {
    const std::size_t n = p.num_vars(), m = p.rows.size();
    if (n == 0 || n > 2000) return false;
    for (std::size_t j = 0; j < n; ++j) {
        if (!p.integer[j] || p.lower[j] != 0.0 || p.upper[j] != 1.0) return false;
    }
    std::vector<std::vector<double>> a(m, std::vector<double>(n, 0.0));
    std::vector<double> act(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (const auto& [v, c] : p.rows[i].terms) a[i][v] += c;
        for (std::size_t j = 0; j < n; ++j) act[i] += a[i][j] * x[j];
    }
    auto fits = [&](std::size_t out, std::size_t in) {
        for (std::size_t i = 0; i < m; ++i) {
            double v = act[i];
            if (out < n) v -= a[i][out];
            if (in < n) v += a[i][in];
            if (v < p.rows[i].lo - tol || v > p.rows[i].hi + tol) return false;
        }
        return true;
    };
    auto apply = [&](std::size_t out, std::size_t in) {
        for (std::size_t i = 0; i < m; ++i) {
            if (out < n) act[i] -= a[i][out];
            if (in < n) act[i] += a[i][in];
        }
        if (out < n) x[out] = 0.0;
        if (in < n) x[in] = 1.0;
    };
    bool improved = false;
    for (std::size_t pass = 0; pass < 4 * n; ++pass) {
        bool moved = false;
        for (std::size_t j = 0; j < n && !moved; ++j) {
            bool on = x[j] > 0.5;
            double gain = on ? p.cost[j] : -p.cost[j];  // decrease in cost
            if (gain > 1e-12 && (on ? fits(j, n) : fits(n, j))) {
                on ? apply(j, n) : apply(n, j);
                moved = true;
            }
        }
        for (std::size_t o = 0; o < n && !moved; ++o) {
            if (x[o] < 0.5) continue;
            for (std::size_t in = 0; in < n; ++in) {
                if (x[in] > 0.5 || p.cost[o] - p.cost[in] <= 1e-12) continue;
                if (fits(o, in)) {
                    apply(o, in);
                    moved = true;
                    break;
                }
            }
        }
        if (!moved) break;
        improved = true;
    }
    return improved;
}

}  // namespace

LpResult solve_lp(const Problem& p, const std::vector<double>& lower, const std::vector<double>& upper,
                  double tol) {
    Columns cols(p);
    Simplex s(p, cols, lower, upper, tol);
    return s.run();
}

LpResult solve_lp(const Problem& p, double tol) { return solve_lp(p, p.lower, p.upper, tol); }

bool is_feasible_point(const Problem& p, const std::vector<double>& x, double tol) {
    if (x.size() != p.num_vars()) return false;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (x[j] < p.lower[j] - tol || x[j] > p.upper[j] + tol) return false;
        if (p.integer[j] && std::abs(x[j] - std::round(x[j])) > tol) return false;
    }
    for (const auto& r : p.rows) {
        double a = 0.0;
        for (const auto& [v, c] : r.terms) a += c * x[v];
        if (a < r.lo - tol || a > r.hi + tol) return false;
    }
    return true;
}

MilpResult solve_milp(const Problem& p, const MilpOptions& opts) {
    MilpResult res;
    const std::size_t n = p.num_vars();
    double incumbent = kInf;
    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    std::uint64_t seq = 0;
    open.push(Node{-kInf, 0, seq++, {}, {}});
    // Best-bound search, interleaved with depth-first dives that follow the
    // rounding direction: continuously until the first incumbent, then one
    // dive every dive_interval nodes.
    std::optional<Node> dive;
    auto cutoff = [&]() { return incumbent - std::max(opts.obj_tol, opts.rel_gap * std::abs(incumbent)); };

    const Columns cols(p);
    std::vector<double> lo(n), up(n);
    while (dive || !open.empty()) {
        if (res.nodes >= opts.node_limit) {
            res.status = Status::NodeLimit;
            res.best_bound = dive ? dive->bound : open.top().bound;
            if (!open.empty()) res.best_bound = std::min(res.best_bound, open.top().bound);
            return res;
        }
        Node node;
        const bool diving = dive.has_value() || !res.has_incumbent || (res.nodes % opts.dive_interval == 0);
        if (dive) {
            node = std::move(*dive);
            dive.reset();
        } else {
            node = open.top();
            open.pop();
        }
        if (node.bound >= cutoff()) continue;
        ++res.nodes;

        lo = p.lower;
        up = p.upper;
        for (const auto& [v, val] : node.fixings) lo[v] = up[v] = val;
        LpResult lp = Simplex(p, cols, lo, up, opts.feas_tol, node.hint.empty() ? nullptr : &node.hint).run();
        if (lp.status == Status::Unbounded) {
            if (!res.has_incumbent) {
                res.status = Status::Unbounded;
                return res;
            }
            continue;
        }
        if (lp.status != Status::Optimal) continue;
        if (lp.objective >= cutoff()) continue;

        // most fractional integer variable, ties -> lowest index
        std::size_t branch = n;
        double best_frac = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (!p.integer[j]) continue;
            double f = lp.x[j] - std::floor(lp.x[j]);
            double dist = std::min(f, 1.0 - f);
            if (dist > 1e-7 && dist > best_frac + 1e-12) {
                best_frac = dist;
                branch = j;
            }
        }
        if (branch == n) {
            std::vector<double> x = lp.x;
            for (std::size_t j = 0; j < n; ++j) {
                if (p.integer[j]) x[j] = std::round(x[j]);
            }
            if (!is_feasible_point(p, x, opts.feas_tol)) {
                // rounding broke a row; re-solve continuous part with integers fixed
                std::vector<double> flo = lo, fup = up;
                for (std::size_t j = 0; j < n; ++j) {
                    if (p.integer[j]) flo[j] = fup[j] = x[j];
                }
                LpResult fix = Simplex(p, cols, flo, fup, opts.feas_tol).run();
                if (fix.status != Status::Optimal || !is_feasible_point(p, fix.x, 1e-7)) continue;
                x = fix.x;
                for (std::size_t j = 0; j < n; ++j) {
                    if (p.integer[j]) x[j] = std::round(x[j]);
                }
            }
            if (opts.local_search) improve_binary(p, x, opts.feas_tol);
            double obj = 0.0;
            for (std::size_t j = 0; j < n; ++j) obj += p.cost[j] * x[j];
            if (obj < incumbent - opts.obj_tol || !res.has_incumbent) {
                incumbent = obj;
                res.x = std::move(x);
                res.objective = obj;
                res.has_incumbent = true;
                if (opts.first_feasible) break;
            }
            continue;
        }
        double v = lp.x[branch];
        Node upn{lp.objective, node.depth + 1, seq++, node.fixings, lp.x};
        upn.fixings.emplace_back(branch, std::ceil(v));
        Node dnn{lp.objective, node.depth + 1, seq++, std::move(node.fixings), std::move(lp.x)};
        dnn.fixings.emplace_back(branch, std::floor(v));
        if (diving && opts.dive_interval > 0) {
            bool up_first = v - std::floor(v) >= 0.5;
            open.push(up_first ? std::move(dnn) : std::move(upn));
            dive = up_first ? std::move(upn) : std::move(dnn);
        } else {
            open.push(std::move(upn));
            open.push(std::move(dnn));
        }
    }
    res.status = res.has_incumbent ? Status::Optimal : Status::Infeasible;
    return res;
}

std::string to_lp_format(const Problem& p) {
    std::ostringstream os;
    os.precision(17);
    auto name = [&](std::size_t j) {
        return p.var_names[j].empty() ? "x" + std::to_string(j) : p.var_names[j];
    };
    auto term = [&](double c, std::size_t j, bool first) {
        if (c < 0) os << (first ? "-" : " - ") << -c << ' ' << name(j);
        else os << (first ? "" : " + ") << c << ' ' << name(j);
    };
    os << "Minimize\n obj:";
    bool first = true;
    for (std::size_t j = 0; j < p.num_vars(); ++j) {
        if (p.cost[j] == 0.0) continue;
        os << ' ';
        term(p.cost[j], j, first);
        first = false;
    }
    if (first) os << " 0";
    os << "\nSubject To\n";
    for (std::size_t i = 0; i < p.rows.size(); ++i) {
        const auto& r = p.rows[i];
        std::string rn = r.name.empty() ? "r" + std::to_string(i) : r.name;
        auto body = [&]() {
            bool f = true;
            for (const auto& [v, c] : r.terms) {
                os << ' ';
                term(c, v, f);
                f = false;
            }
            if (f) os << " 0 x0";
        };
        if (std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo == r.hi) {
            os << ' ' << rn << ':';
            body();
            os << " = " << r.lo << '\n';
            continue;
        }
        if (std::isfinite(r.lo)) {
            os << ' ' << rn << "_lo:";
            body();
            os << " >= " << r.lo << '\n';
        }
        if (std::isfinite(r.hi)) {
            os << ' ' << rn << "_hi:";
            body();
            os << " <= " << r.hi << '\n';
        }
    }
    os << "Bounds\n";
    for (std::size_t j = 0; j < p.num_vars(); ++j) {
        if (p.integer[j] && p.lower[j] == 0.0 && p.upper[j] == 1.0) continue;
        os << ' ';
        if (std::isfinite(p.lower[j])) os << p.lower[j];
        else os << "-inf";
        os << " <= " << name(j) << " <= ";
        if (std::isfinite(p.upper[j])) os << p.upper[j];
        else os << "+inf";
        os << '\n';
    }
    os << "Binaries\n";
    for (std::size_t j = 0; j < p.num_vars(); ++j) {
        if (p.integer[j] && p.lower[j] == 0.0 && p.upper[j] == 1.0) os << ' ' << name(j) << '\n';
    }
    bool any_gen = false;
    for (std::size_t j = 0; j < p.num_vars(); ++j) {
        if (p.integer[j] && !(p.lower[j] == 0.0 && p.upper[j] == 1.0)) {
            if (!any_gen) os << "General\n";
            any_gen = true;
            os << ' ' << name(j) << '\n';
        }
    }
    os << "End\n";
    return os.str();
}

}  // namespace bundleforge::milp
