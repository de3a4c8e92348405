#include "krivine/certificate.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace krivine {

namespace {

using nlohmann::json;

// Local x_i / (1-x_i) factors so the verification path stays inside the
// polynomial module.
Polynomial cube_factor(int id, int nvars) {
    const int var = id / 2;
    if (var < 0 || var >= nvars) throw std::runtime_error("generator id out of range");
    ExponentVec unit(static_cast<size_t>(nvars), 0);
    unit[static_cast<size_t>(var)] = 1;
    Polynomial p(nvars);
    if (id % 2 == 0) {
        p.add_term(unit, 1);
    } else {
        p.add_term(ExponentVec(static_cast<size_t>(nvars), 0), 1);
        p.add_term(unit, -1);
    }
    return p;
}

// Structural sanity of one term; pushes a message and returns false when the
// term cannot even be expanded.
bool term_shape_ok(const CertificateTerm& t, size_t index, int nvars, size_t naxioms,
                   std::vector<std::string>& failures) {
    const std::string tag = "term " + std::to_string(index) + ": ";
    if (t.is_krivine()) {
        if (static_cast<int>(t.term.alpha.size()) != nvars ||
            static_cast<int>(t.term.beta.size()) != nvars) {
            failures.push_back(tag + "exponent vectors do not match the variable count");
            return false;
        }
        if (!t.multipliers.empty()) {
            failures.push_back(tag + "multiplier chain on a non-axiom term");
            return false;
        }
        return true;
    }
    if (t.axiom_index >= static_cast<int>(naxioms)) {
        failures.push_back(tag + "axiom index " + std::to_string(t.axiom_index) +
                           " out of range");
        return false;
    }
    for (int id : t.multipliers)
        if (id < 0 || id >= 2 * nvars) {
            failures.push_back(tag + "generator id " + std::to_string(id) + " out of range");
            return false;
        }
    return true;
}

Polynomial expand_term(const CertificateTerm& t, const std::vector<Polynomial>& axioms,
                       int nvars) {
    if (t.is_krivine()) return expand_krivine(t.term, nvars);
    Polynomial acc = axioms[static_cast<size_t>(t.axiom_index)];
    if (t.axiom_negated) acc = poly_neg(acc);
    for (int id : t.multipliers) acc = poly_mul_naive(acc, cube_factor(id, nvars));
    return acc;
}

json term_to_json(const CertificateTerm& t) {
    json j;
    j["lambda"] = rational_to_string(t.lambda);
    if (t.is_krivine()) {
        j["alpha"] = t.term.alpha;
        j["beta"] = t.term.beta;
    } else {
        j["axiom_index"] = t.axiom_index;
        j["negated"] = t.axiom_negated;
        j["multipliers"] = t.multipliers;
    }
    return j;
}

ExponentVec exponents_from_json(const json& arr, int nvars, const std::string& what) {
    if (!arr.is_array() || static_cast<int>(arr.size()) != nvars)
        throw std::runtime_error(what + " must be an array of length nvars");
    ExponentVec out;
    for (const auto& v : arr) {
        if (!v.is_number_integer() || v.get<long>() < 0)
            throw std::runtime_error(what + " entries must be non-negative integers");
        out.push_back(v.get<unsigned>());
    }
    return out;
}

CertificateTerm term_from_json(const json& j, int nvars) {
    if (!j.is_object()) throw std::runtime_error("certificate term must be an object");
    CertificateTerm t;
    t.lambda = parse_rational(j.at("lambda").get<std::string>());
    const bool has_axiom = j.contains("axiom_index");
    const bool has_krivine = j.contains("alpha") || j.contains("beta");
    if (has_axiom && has_krivine)
        throw std::runtime_error("certificate term mixes axiom and exponent forms");
    if (has_axiom) {
        if (!j.at("axiom_index").is_number_integer() || j.at("axiom_index").get<int>() < 0)
            throw std::runtime_error("axiom_index must be a non-negative integer");
        t.axiom_index = j.at("axiom_index").get<int>();
        t.axiom_negated = j.value("negated", false);
        if (j.contains("multipliers")) {
            for (const auto& v : j.at("multipliers")) {
                if (!v.is_number_integer() || v.get<int>() < 0 || v.get<int>() >= 2 * nvars)
                    throw std::runtime_error("multiplier ids must be generator ids");
                t.multipliers.push_back(v.get<int>());
            }
        }
        t.term.alpha.assign(static_cast<size_t>(nvars), 0);
        t.term.beta.assign(static_cast<size_t>(nvars), 0);
    } else {
        t.term.alpha = exponents_from_json(j.at("alpha"), nvars, "alpha");
        t.term.beta = exponents_from_json(j.at("beta"), nvars, "beta");
    }
    return t;
}

} // namespace

std::string CertificateTerm::describe() const {
    if (is_krivine()) return krivine_term_to_string(term);
    std::string s = axiom_negated ? "-g" : "+g";
    s += std::to_string(axiom_index + 1);
    for (int id : multipliers) s += "*" + generator_name(id);
    return s;
}

std::string VerifyReport::summary() const {
    if (failures.empty()) return "ok";
    std::string s;
    for (size_t i = 0; i < failures.size(); ++i) {
        if (i) s += "; ";
        s += failures[i];
    }
    return s;
}

VerifyReport verify_certificate(const Polynomial& f, const std::vector<Polynomial>& axioms,
                                const Certificate& cert) {
    VerifyReport rep;
    if (cert.format_version != 1) {
        rep.failures.push_back("unsupported certificate format_version");
        return rep;
    }
    if (cert.nvars != f.nvars()) {
        rep.failures.push_back("certificate is for " + std::to_string(cert.nvars) +
                               " variables, polynomial has " + std::to_string(f.nvars()));
        return rep;
    }
    for (const auto& g : axioms)
        if (g.nvars() != f.nvars()) {
            rep.failures.push_back("axiom variable count mismatch");
            return rep;
        }

    bool expandable = true;
    Polynomial sum(f.nvars());
    for (size_t i = 0; i < cert.terms.size(); ++i) {
        const auto& t = cert.terms[i];
        if (t.lambda < 0)
            rep.failures.push_back("term " + std::to_string(i) + ": negative weight " +
                                   rational_to_string(t.lambda));
        if (!term_shape_ok(t, i, f.nvars(), axioms.size(), rep.failures)) {
            expandable = false;
            continue;
        }
        sum = poly_add(sum, poly_scale(expand_term(t, axioms, f.nvars()), t.lambda));
    }
    if (cert.gamma < 0)
        rep.failures.push_back("negative gamma " + rational_to_string(cert.gamma));

    if (expandable) {
        sum.add_term(ExponentVec(static_cast<size_t>(f.nvars()), 0), cert.gamma);
        if (!(sum == f)) {
            rep.failures.push_back("identity fails, residual f - (gamma + sum) = " +
                                   to_string(poly_sub(f, sum)));
        }
    }
    rep.ok = rep.failures.empty();
    return rep;
}

VerifyReport verify_certificate(const Problem& problem, const Certificate& cert) {
    const std::string digest = problem_digest(problem);
    if (digest != cert.problem_digest) {
        VerifyReport rep;
        rep.failures.push_back("digest mismatch: certificate " + cert.problem_digest +
                               ", problem " + digest);
        return rep;
    }
    return verify_certificate(problem.regularized(), problem.regularized_axioms(), cert);
}

ExtractionResult extract_certificate(const Polynomial& f,
                                     const std::vector<BasisElement>& memory,
                                     const LpSolution& solution,
                                     const ExtractionOptions& opts) {
    ExtractionResult res;
    if (solution.status != LpStatus::Optimal) {
        res.reason = "LP solution is not optimal";
        return res;
    }
    if (solution.lambda.size() != memory.size()) {
        res.reason = "weight count does not match the memory size";
        return res;
    }

    // Column indices by decreasing float weight, ties by position.
    std::vector<size_t> order(memory.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return solution.lambda[a] > solution.lambda[b];
    });
    size_t count = 0;
    while (count < order.size() && solution.lambda[order[count]] > opts.support_tol) ++count;

    res.reason = "restricted exact solve never succeeded";
    for (int attempt = 0; attempt <= opts.max_widenings; ++attempt) {
        std::vector<size_t> support(order.begin(), order.begin() + count);
        std::sort(support.begin(), support.end());
        std::vector<Polynomial> columns;
        for (size_t idx : support) columns.push_back(memory[idx].expansion);

        ExactSolution es = solve_restricted_exact(f, columns);
        bool usable = es.ok;
        if (!usable) {
            res.reason = "support of " + std::to_string(count) + ": " + es.reason;
        } else if (es.gamma < 0) {
            usable = false;
            res.reason = "support of " + std::to_string(count) + ": exact gamma " +
                         rational_to_string(es.gamma) + " is negative";
        } else {
            for (size_t j = 0; j < support.size() && usable; ++j)
                if (es.lambda[j] < 0) {
                    usable = false;
                    res.reason = "support of " + std::to_string(count) +
                                 ": negative exact weight on " +
                                 memory[support[j]].describe();
                }
        }
        if (usable) {
            Certificate cert;
            cert.nvars = f.nvars();
            cert.gamma = es.gamma;
            for (size_t j = 0; j < support.size(); ++j) {
                if (es.lambda[j] == 0) continue;
                const BasisElement& e = memory[support[j]];
                CertificateTerm t;
                t.lambda = es.lambda[j];
                t.term = e.term;
                t.axiom_index = e.axiom_index;
                t.axiom_negated = e.axiom_negated;
                t.multipliers = e.multipliers;
                if (!t.is_krivine()) {
                    t.term.alpha.assign(static_cast<size_t>(f.nvars()), 0);
                    t.term.beta.assign(static_cast<size_t>(f.nvars()), 0);
                }
                cert.terms.push_back(std::move(t));
            }
            res.ok = true;
            res.certificate = std::move(cert);
            res.reason.clear();
            return res;
        }
        if (count == order.size()) break;
        count = std::min(order.size(), std::max(count + 1, 2 * count));
    }
    return res;
}

std::string certificate_to_json_text(const Certificate& cert) {
    json j;
    j["format_version"] = cert.format_version;
    j["problem_digest"] = cert.problem_digest;
    j["nvars"] = cert.nvars;
    j["gamma"] = rational_to_string(cert.gamma);
    j["terms"] = json::array();
    for (const auto& t : cert.terms) j["terms"].push_back(term_to_json(t));
    return j.dump(2);
}

Certificate certificate_from_json_text(const std::string& text) {
    try {
        const json j = json::parse(text);
        if (!j.is_object()) throw std::runtime_error("top level must be an object");
        if (j.at("format_version").get<int>() != 1)
            throw std::runtime_error("unsupported format_version");
        Certificate cert;
        cert.problem_digest = j.at("problem_digest").get<std::string>();
        if (!j.at("nvars").is_number_integer() || j.at("nvars").get<int>() < 1)
            throw std::runtime_error("nvars must be a positive integer");
        cert.nvars = j.at("nvars").get<int>();
        cert.gamma = parse_rational(j.at("gamma").get<std::string>());
        if (!j.at("terms").is_array())
            throw std::runtime_error("terms must be an array");
        for (const auto& tj : j.at("terms"))
            cert.terms.push_back(term_from_json(tj, cert.nvars));
        return cert;
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("malformed certificate file: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("malformed certificate file: ") + e.what());
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(std::string("malformed certificate file: ") + e.what());
    }
}

void save_certificate(const Certificate& cert, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write certificate file: " + path);
    out << certificate_to_json_text(cert) << "\n";
    if (!out) throw std::runtime_error("error while writing certificate file: " + path);
}

Certificate load_certificate(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open certificate file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return certificate_from_json_text(buf.str());
}

namespace {

std::string render_combination(const Certificate& cert,
                               const std::map<std::string, int>& admitted_at) {
    std::vector<std::string> parts;
    if (cert.gamma != 0 || cert.terms.empty())
        parts.push_back(rational_to_string(cert.gamma));
    for (const auto& t : cert.terms) {
        const std::string name = t.describe();
        auto it = admitted_at.find(name);
        const std::string ref =
            it == admitted_at.end() ? name : "[step " + std::to_string(it->second) + "]";
        parts.push_back(t.lambda == 1 ? ref : rational_to_string(t.lambda) + "*" + ref);
    }
    std::string line;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) line += " + ";
        line += parts[i];
    }
    return line;
}

} // namespace

std::string render_proof(const Certificate& cert, const std::vector<StepRecord>& trace,
                         const std::vector<BasisElement>& memory) {
    std::map<std::string, int> admitted_at;
    std::ostringstream out;
    for (std::size_t i = 1; i < trace.size(); ++i) {
        if (trace[i].memory_size <= trace[i - 1].memory_size) continue;
        admitted_at.emplace(trace[i].element, trace[i].step);
        const std::size_t idx = static_cast<std::size_t>(trace[i].memory_size) - 1;
        out << "[step " << trace[i].step << "] ";
        if (idx < memory.size())
            out << to_string(memory[idx].expansion);
        else
            out << trace[i].element;
        out << "\n";
    }
    out << "Non-negative representation:\n" << render_combination(cert, admitted_at) << "\n";
    return out.str();
}

std::string render_proof(const Certificate& cert) {
    return "Non-negative representation:\n" + render_combination(cert, {}) + "\n";
}

} // namespace krivine
