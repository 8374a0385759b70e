#include "singvolt/problem_file.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "singvolt/errors.hpp"
#include "singvolt/expression.hpp"

namespace singvolt {

namespace {

using Index = Eigen::Index;

const std::vector<std::string> kSections{"weights", "kernel",   "generator", "free_term", "fractional",
                                         "controls", "cost",    "mesh",      "solver"};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

// Key with a 1-based numeric suffix, e.g. f2 -> ("f", 2).
std::pair<std::string, std::size_t> indexed(const std::string& key) {
    std::size_t p = key.size();
    while (p > 0 && std::isdigit(static_cast<unsigned char>(key[p - 1]))) --p;
    if (p == key.size() || p == 0) return {key, 0};
    return {key.substr(0, p), std::stoul(key.substr(p))};
}

struct Entry {
    std::string value;
    std::size_t line;
};

class Builder {
public:
    explicit Builder(std::vector<ProblemSection> sections) : sections_(std::move(sections)) {
        for (const auto& sec : sections_) {
            for (const auto& e : sec.entries) {
                if (sec.name == "cost" && e.key == "term") {
                    terms_.push_back({e.value, e.line});
                    continue;
                }
                auto& slot = table_[sec.name][e.key];
                if (slot.line != 0) throw ParseError(e.line, "duplicate key '" + e.key + "'");
                slot = {e.value, e.line};
                check_key(sec.name, e.key, e.line);
            }
            section_line_[sec.name] = sec.line;
        }
    }

    ProblemFile build() {
        ProblemFile pf;
        pf.sections = sections_;
        n_ = state_dim();
        build_controls(pf.spec);
        m_ = pf.spec.controls.dim();
        vars_ = std::make_unique<VariableTable>(n_, m_);
        pf.spec.state_dim = n_;
        build_weights(pf.spec);
        if (has("fractional")) {
            if (has("generator") || has("free_term")) {
                throw ParseError(section_line_["fractional"],
                                 "[fractional] replaces [generator] and [free_term]; give only one form");
            }
            build_fractional(pf);
        } else {
            build_kernel(pf.spec);
            build_generator(pf.spec);
            build_free_term(pf.spec);
        }
        build_cost(pf.spec);
        build_settings(pf);
        pf.spec.p_norm = number_or("solver", "p", 2.0);
        check_semantics(pf.spec);
        return pf;
    }

private:
    static void check_key(const std::string& section, const std::string& key, std::size_t line) {
        static const std::map<std::string, std::set<std::string>> plain{
            {"weights", {"points", "alpha"}},
            {"kernel", {"beta", "T"}},
            {"generator", {"phi_bar", "L_bar", "q"}},
            {"free_term", {"singular_points", "origin_exponent"}},
            {"fractional", {"kind", "alpha"}},
            {"controls", {"candidates", "box_lower", "box_upper", "box_counts", "u0_index"}},
            {"cost", {"g"}},
            {"mesh", {"N", "r"}},
            {"solver", {"picard_tol", "picard_max", "window_count", "blowup_cap", "p"}},
        };
        static const std::map<std::string, std::string> numbered{
            {"generator", "f"}, {"free_term", "eta"}, {"fractional", "init"}};
        const auto it = plain.find(section);
        if (it == plain.end()) throw ParseError(line, "unknown section [" + section + "]");
        if (it->second.count(key)) return;
        const auto [stem, idx] = indexed(key);
        if (idx > 0) {
            const auto nb = numbered.find(section);
            if (nb != numbered.end() && nb->second == stem) return;
            if (section == "fractional" && stem == "rhs") return;
        }
        throw ParseError(line, "unknown key '" + key + "' in [" + section + "]");
    }

    bool has(const std::string& section) const { return table_.count(section) > 0 || section_line_.count(section) > 0; }

    const Entry* find(const std::string& section, const std::string& key) const {
        const auto s = table_.find(section);
        if (s == table_.end()) return nullptr;
        const auto e = s->second.find(key);
        return e == s->second.end() ? nullptr : &e->second;
    }

    const Entry& require(const std::string& section, const std::string& key) const {
        const Entry* e = find(section, key);
        if (!e) {
            const auto it = section_line_.find(section);
            throw ParseError(it == section_line_.end() ? 0 : it->second,
                             "missing key '" + key + "' in [" + section + "]");
        }
        return *e;
    }

    static double parse_number(const std::string& text, std::size_t line) {
        const std::string t = trim(text);
        if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
        if (t == "-inf") return -std::numeric_limits<double>::infinity();
        try {
            const Expression e = Expression::parse(t, VariableTable(0, 0));
            if (e.depends_on(0) || e.depends_on(1)) throw ParseError(line, "expected a number, got '" + t + "'");
            const double v = e.eval(nullptr);
            if (std::isnan(v)) throw ParseError(line, "'" + t + "' is not a number");
            return v;
        } catch (const ParseError& err) {
            if (err.line() > 0) throw;
            throw ParseError(line, err.what());
        }
    }

    static std::vector<double> parse_list(const std::string& text, std::size_t line) {
        std::vector<double> out;
        if (trim(text).empty()) return out;
        for (const auto& part : split(text, ',')) out.push_back(parse_number(part, line));
        return out;
    }

    static std::size_t parse_count(const std::string& text, std::size_t line) {
        const double v = parse_number(text, line);
        if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) {
            throw ParseError(line, "expected a nonnegative integer, got '" + trim(text) + "'");
        }
        return static_cast<std::size_t>(v);
    }

    double number_or(const std::string& section, const std::string& key, double fallback) const {
        const Entry* e = find(section, key);
        return e ? parse_number(e->value, e->line) : fallback;
    }

    Expression expr(const Entry& e, std::initializer_list<std::size_t> allowed_fixed, bool allow_y,
                    bool allow_u) const {
        Expression x;
        try {
            x = Expression::parse(e.value, *vars_);
        } catch (const ParseError& err) {
            throw ParseError(e.line, err.what());
        }
        for (std::size_t slot = 0; slot < vars_->slot_count(); ++slot) {
            if (!x.depends_on(slot)) continue;
            const bool fixed = slot < 2 && std::find(allowed_fixed.begin(), allowed_fixed.end(), slot) != allowed_fixed.end();
            const bool is_y = slot >= 2 && slot < 2 + n_;
            const bool is_u = slot >= 2 + n_;
            if (fixed || (is_y && allow_y) || (is_u && allow_u)) continue;
            throw ParseError(e.line, "variable '" + vars_->name(slot) + "' is not allowed here");
        }
        return x;
    }

    std::size_t state_dim() const {
        std::size_t n = 0;
        for (const auto& [section, stem] : std::vector<std::pair<std::string, std::string>>{
                 {"generator", "f"}, {"free_term", "eta"}, {"fractional", "init"}, {"fractional", "rhs"}}) {
            const auto s = table_.find(section);
            if (s == table_.end()) continue;
            for (const auto& [key, e] : s->second) {
                const auto [k, idx] = indexed(key);
                if (k == stem) n = std::max(n, idx);
            }
        }
        if (n == 0) throw ParseError(1, "no state components: give f1.., eta1.. or [fractional] init1..");
        return n;
    }

    std::vector<Expression> numbered(const std::string& section, const std::string& stem,
                                     std::initializer_list<std::size_t> fixed, bool allow_y, bool allow_u) const {
        std::vector<Expression> out;
        for (std::size_t i = 1; i <= n_; ++i) {
            out.push_back(expr(require(section, stem + std::to_string(i)), fixed, allow_y, allow_u));
        }
        return out;
    }

    void build_controls(ProblemSpec& spec) const {
        const Entry* cand = find("controls", "candidates");
        const Entry* lo = find("controls", "box_lower");
        if (cand && lo) throw ParseError(lo->line, "give either candidates or a box, not both");
        if (cand) {
            ControlSpace cs;
            for (const auto& item : split(cand->value, ';')) {
                if (item.empty()) continue;
                const auto v = parse_list(item, cand->line);
                cs.candidates.push_back(Eigen::Map<const Vec>(v.data(), static_cast<Index>(v.size())));
                if (cs.candidates.back().size() != cs.candidates.front().size()) {
                    throw ParseError(cand->line, "control candidates differ in dimension");
                }
            }
            if (cs.candidates.empty()) throw ParseError(cand->line, "empty candidate list");
            spec.controls = std::move(cs);
        } else if (lo) {
            const Entry& hi = require("controls", "box_upper");
            const Entry& cnt = require("controls", "box_counts");
            const auto l = parse_list(lo->value, lo->line);
            const auto u = parse_list(hi.value, hi.line);
            std::vector<std::size_t> counts;
            for (const auto& c : split(cnt.value, ',')) counts.push_back(parse_count(c, cnt.line));
            try {
                spec.controls = ControlSpace::box(Eigen::Map<const Vec>(l.data(), static_cast<Index>(l.size())),
                                                  Eigen::Map<const Vec>(u.data(), static_cast<Index>(u.size())),
                                                  counts);
            } catch (const UsageError& err) {
                throw ParseError(lo->line, err.what());
            }
        }
        if (const Entry* e = find("controls", "u0_index")) {
            spec.controls.u0_index = parse_count(e->value, e->line);
            if (spec.controls.u0_index >= spec.controls.size()) throw ParseError(e->line, "u0_index out of range");
        }
    }

    void build_weights(ProblemSpec& spec) const {
        const Entry* p = find("weights", "points");
        const Entry* a = find("weights", "alpha");
        if (!p && !a) return;
        if (!p || !a) throw ParseError((p ? p : a)->line, "[weights] needs both points and alpha");
        spec.weight.points = parse_list(p->value, p->line);
        spec.weight.exponents = parse_list(a->value, a->line);
        if (spec.weight.points.size() != spec.weight.exponents.size()) {
            throw ParseError(a->line, "points and alpha must have the same length");
        }
        for (double x : spec.weight.exponents) {
            if (!(x > 0.0 && x <= 1.0)) throw ParseError(a->line, "weight exponents alpha must lie in (0, 1]");
        }
    }

    void build_kernel(ProblemSpec& spec) const {
        const Entry& b = require("kernel", "beta");
        spec.kernel.beta = parse_number(b.value, b.line);
        if (!(spec.kernel.beta > 0.0 && spec.kernel.beta < 1.0)) throw ParseError(b.line, "beta must lie in (0, 1)");
        read_T(spec);
    }

    void read_T(ProblemSpec& spec) const {
        const Entry& T = require("kernel", "T");
        spec.kernel.T = parse_number(T.value, T.line);
        if (!(spec.kernel.T > 0.0) || std::isinf(spec.kernel.T)) throw ParseError(T.line, "T must be positive and finite");
        const Entry* b = find("kernel", "beta");
        if (b && has("fractional")) throw ParseError(b->line, "beta is set by [fractional] alpha");
    }

    // Vector-valued evaluator over (t, s, y, u) built from component expressions.
    struct VecFn {
        std::vector<Expression> comps;
        std::size_t n = 0;
        std::size_t m = 0;

        Vec operator()(double t, double s, const Vec& y, const Vec& u) const {
            std::array<double, 64> slots{};
            fill(slots, t, s, y, u);
            Vec out(static_cast<Index>(comps.size()));
            for (std::size_t i = 0; i < comps.size(); ++i) out(static_cast<Index>(i)) = comps[i].eval(slots.data());
            return out;
        }

        void fill(std::array<double, 64>& slots, double t, double s, const Vec& y, const Vec& u) const {
            slots[0] = t;
            slots[1] = s;
            for (std::size_t i = 0; i < n && i < static_cast<std::size_t>(y.size()); ++i) slots[2 + i] = y(static_cast<Index>(i));
            for (std::size_t i = 0; i < m && i < static_cast<std::size_t>(u.size()); ++i) slots[2 + n + i] = u(static_cast<Index>(i));
        }
    };

    struct MatFn {
        std::vector<std::vector<Expression>> rows;  // rows[i][c] = d comp_i / d y_c
        VecFn layout;

        Mat operator()(double t, double s, const Vec& y, const Vec& u) const {
            std::array<double, 64> slots{};
            layout.fill(slots, t, s, y, u);
            Mat out(static_cast<Index>(rows.size()), static_cast<Index>(layout.n));
            for (std::size_t i = 0; i < rows.size(); ++i) {
                for (std::size_t c = 0; c < layout.n; ++c) {
                    out(static_cast<Index>(i), static_cast<Index>(c)) = rows[i][c].eval(slots.data());
                }
            }
            return out;
        }
    };

    VecFn vec_fn(std::vector<Expression> comps) const { return VecFn{std::move(comps), n_, m_}; }

    MatFn jacobian(const VecFn& f) const {
        MatFn J{{}, f};
        for (const auto& e : f.comps) {
            std::vector<Expression> row;
            for (std::size_t c = 0; c < n_; ++c) row.push_back(e.derivative(vars_->y_slot(c)));
            J.rows.push_back(std::move(row));
        }
        return J;
    }

    bool any_depends(const std::vector<Expression>& es, std::size_t from, std::size_t to) const {
        for (const auto& e : es) {
            for (std::size_t s = from; s < to; ++s) {
                if (e.depends_on(s)) return true;
            }
        }
        return false;
    }

    void check_slots() const {
        if (vars_->slot_count() > 64) throw ParseError(1, "too many state and control components (limit 62)");
    }

    void build_generator(ProblemSpec& spec) {
        check_slots();
        auto comps = numbered("generator", "f", {VariableTable::t_slot, VariableTable::s_slot}, true, true);
        spec.generator.depends_on_t = any_depends(comps, 0, 1);
        spec.generator.depends_on_u = any_depends(comps, 2 + n_, 2 + n_ + m_);
        generator_depends_on_u_line_ = require("generator", "f1").line;
        const VecFn f = vec_fn(std::move(comps));
        spec.generator.f0_y = jacobian(f);
        spec.generator.f0 = f;
        const Entry* phi = find("generator", "phi_bar");
        const Entry* L = find("generator", "L_bar");
        const Entry* q = find("generator", "q");
        if (phi || L || q) {
            GeneratorBounds b;
            if (phi) b.phi_bar = scalar_of_s(*phi);
            if (L) b.L_bar = scalar_of_s(*L);
            if (q) b.q = parse_number(q->value, q->line);
            if (q && !(b.q > 1.0)) throw ParseError(q->line, "q must exceed 1");
            spec.generator.bounds = b;
        }
    }

    ScalarFn scalar_of_s(const Entry& e) const {
        const Expression x = expr(e, {VariableTable::s_slot}, false, false);
        return [x](double s) {
            std::array<double, 64> slots{};
            slots[1] = s;
            return x.eval(slots.data());
        };
    }

    void build_free_term(ProblemSpec& spec) const {
        auto comps = numbered("free_term", "eta", {VariableTable::t_slot}, false, false);
        const std::size_t n = n_;
        spec.free_term.eta = [comps, n](double t) {
            std::array<double, 64> slots{};
            slots[0] = t;
            Vec out(static_cast<Index>(n));
            for (std::size_t i = 0; i < n; ++i) out(static_cast<Index>(i)) = comps[i].eval(slots.data());
            return out;
        };
        if (const Entry* e = find("free_term", "singular_points")) spec.free_term.singular_points = parse_list(e->value, e->line);
        if (const Entry* e = find("free_term", "origin_exponent")) {
            const double g = parse_number(e->value, e->line);
            if (!(g > -1.0 && g <= 0.0)) throw ParseError(e->line, "origin_exponent must lie in (-1, 0]");
            spec.free_term.origin_exponent = g;
        }
    }

    void build_fractional(ProblemFile& pf) {
        check_slots();
        FracSpec fs;
        const Entry& kind = require("fractional", "kind");
        const std::string k = trim(kind.value);
        if (k == "rl") {
            fs.kind = FracKind::RiemannLiouville;
        } else if (k == "caputo") {
            fs.kind = FracKind::Caputo;
        } else {
            throw ParseError(kind.line, "kind must be rl or caputo");
        }
        const Entry& a = require("fractional", "alpha");
        fs.alpha = parse_number(a.value, a.line);
        if (!(fs.alpha > 0.0 && fs.alpha < 1.0)) throw ParseError(a.line, "alpha must lie in (0, 1)");
        fs.init = Vec(static_cast<Index>(n_));
        for (std::size_t i = 0; i < n_; ++i) {
            const Entry& e = require("fractional", "init" + std::to_string(i + 1));
            fs.init(static_cast<Index>(i)) = parse_number(e.value, e.line);
        }
        // rhs(t, y, u): written with t as the time variable.
        auto comps = numbered("fractional", "rhs", {VariableTable::t_slot}, true, true);
        generator_depends_on_u_line_ = require("fractional", "rhs1").line;
        FracRhs rhs;
        rhs.depends_on_u = any_depends(comps, 2 + n_, 2 + n_ + m_);
        const VecFn f = vec_fn(std::move(comps));
        const MatFn J = jacobian(f);
        rhs.f = [f](double t, const Vec& y, const Vec& u) { return f(t, t, y, u); };
        rhs.f_y = [J](double t, const Vec& y, const Vec& u) { return J(t, t, y, u); };
        ProblemSpec spec = to_volterra(fs, rhs, 1.0);
        spec.weight = pf.spec.weight;
        spec.controls = pf.spec.controls;
        read_T(spec);
        pf.spec = std::move(spec);
        pf.fractional = fs;
    }

    void build_cost(ProblemSpec& spec) const {
        const Entry* g = find("cost", "g");
        if (!g && terms_.empty()) return;
        CostSpec cost;
        if (g) {
            const Expression ge = expr(*g, {VariableTable::t_slot}, true, true);
            std::vector<Expression> gy;
            for (std::size_t c = 0; c < n_; ++c) gy.push_back(ge.derivative(vars_->y_slot(c)));
            const VecFn layout{{}, n_, m_};
            cost.g = [ge, layout](double t, const Vec& y, const Vec& u) {
                std::array<double, 64> slots{};
                layout.fill(slots, t, 0.0, y, u);
                return ge.eval(slots.data());
            };
            cost.g_y = [gy, layout](double t, const Vec& y, const Vec& u) {
                std::array<double, 64> slots{};
                layout.fill(slots, t, 0.0, y, u);
                Vec out(static_cast<Index>(gy.size()));
                for (std::size_t i = 0; i < gy.size(); ++i) out(static_cast<Index>(i)) = gy[i].eval(slots.data());
                return out;
            };
        }
        for (const auto& term : terms_) {
            const auto colon = term.value.find(':');
            if (colon == std::string::npos) throw ParseError(term.line, "cost term must read 'time : expression'");
            CostTerm ct;
            ct.t = parse_number(term.value.substr(0, colon), term.line);
            if (!(ct.t > 0.0 && ct.t <= spec.kernel.T)) throw ParseError(term.line, "cost time must lie in (0, T]");
            for (double p : spec.weight.points) {
                if (ct.t == p) {
                    throw ParseError(term.line, "cost time " + trim(term.value.substr(0, colon)) +
                                                    " coincides with a weight point; cost times must avoid them");
                }
            }
            const Expression he = expr(Entry{term.value.substr(colon + 1), term.line}, {}, true, false);
            std::vector<Expression> hy;
            for (std::size_t c = 0; c < n_; ++c) hy.push_back(he.derivative(vars_->y_slot(c)));
            const VecFn layout{{}, n_, m_};
            ct.h = [he, layout](const Vec& y) {
                std::array<double, 64> slots{};
                layout.fill(slots, 0.0, 0.0, y, Vec(0));
                return he.eval(slots.data());
            };
            ct.h_y = [hy, layout](const Vec& y) {
                std::array<double, 64> slots{};
                layout.fill(slots, 0.0, 0.0, y, Vec(0));
                Vec out(static_cast<Index>(hy.size()));
                for (std::size_t i = 0; i < hy.size(); ++i) out(static_cast<Index>(i)) = hy[i].eval(slots.data());
                return out;
            };
            cost.terms.push_back(std::move(ct));
        }
        spec.cost = std::move(cost);
    }

    void build_settings(ProblemFile& pf) const {
        if (const Entry* e = find("mesh", "N")) {
            pf.mesh_n = parse_count(e->value, e->line);
            if (pf.mesh_n < 2) throw ParseError(e->line, "N must be at least 2");
        }
        if (const Entry* e = find("mesh", "r")) {
            pf.mesh_r = parse_number(e->value, e->line);
            if (!(*pf.mesh_r >= 1.0)) throw ParseError(e->line, "grading r must be at least 1");
        }
        if (const Entry* e = find("solver", "picard_tol")) pf.solve.picard_tol = parse_number(e->value, e->line);
        if (const Entry* e = find("solver", "picard_max")) pf.solve.picard_max = parse_count(e->value, e->line);
        if (const Entry* e = find("solver", "window_count")) pf.solve.window_count = parse_count(e->value, e->line);
        if (const Entry* e = find("solver", "blowup_cap")) pf.solve.blowup_cap = parse_number(e->value, e->line);
        if (!(pf.solve.picard_tol > 0.0)) throw ParseError(find("solver", "picard_tol")->line, "picard_tol must be positive");
        if (const Entry* e = find("solver", "p")) {
            const double p = parse_number(e->value, e->line);
            if (!(p >= 1.0)) throw ParseError(e->line, "p must be at least 1");
        }
    }

    void check_semantics(const ProblemSpec& spec) const {
        if (spec.generator.depends_on_u && spec.controls.dim() == 0) {
            throw ParseError(generator_depends_on_u_line_,
                             "the generator depends on u but [controls] gives no control values");
        }
        for (const auto& d : validate(spec)) {
            if (d.severity == Severity::Error) throw ParseError(1, d.message);
        }
    }

    std::vector<ProblemSection> sections_;
    std::map<std::string, std::map<std::string, Entry>> table_;
    std::map<std::string, std::size_t> section_line_;
    std::vector<Entry> terms_;
    std::size_t n_ = 0;
    std::size_t m_ = 0;
    std::unique_ptr<VariableTable> vars_;
    std::size_t generator_depends_on_u_line_ = 1;
};

}  // namespace

ProblemFile parse_problem(std::string_view text) {
    std::vector<ProblemSection> sections;
    std::istringstream is{std::string(text)};
    std::string raw;
    std::size_t line = 0;
    std::set<std::string> seen;
    while (std::getline(is, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ParseError(line, "malformed section header");
            const std::string name = trim(s.substr(1, s.size() - 2));
            if (std::find(kSections.begin(), kSections.end(), name) == kSections.end()) {
                throw ParseError(line, "unknown section [" + name + "]");
            }
            if (!seen.insert(name).second) throw ParseError(line, "section [" + name + "] appears twice");
            sections.push_back({name, line, {}});
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ParseError(line, "expected 'key = value'");
        if (sections.empty()) throw ParseError(line, "entry outside of any section");
        const std::string key = trim(s.substr(0, eq));
        if (key.empty()) throw ParseError(line, "empty key");
        sections.back().entries.push_back({key, trim(s.substr(eq + 1)), line});
    }
    return Builder(std::move(sections)).build();
}

ProblemFile load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open problem file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_problem(ss.str());
}

std::string serialize(const ProblemFile& file) {
    std::ostringstream os;
    bool first = true;
    for (const auto& name : kSections) {
        for (const auto& sec : file.sections) {
            if (sec.name != name) continue;
            if (!first) os << '\n';
            first = false;
            os << '[' << sec.name << "]\n";
            for (const auto& e : sec.entries) os << e.key << " = " << e.value << '\n';
        }
    }
    return os.str();
}

}  // namespace singvolt
