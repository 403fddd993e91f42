#include "gformula/modelspec_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gformula {

namespace {

std::string strip(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& s, const std::string& what) {
    std::string t = strip(s);
    double v = 0;
    auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
        throw std::runtime_error("malformed number in " + what + ": '" + s + "'");
    return v;
}

} // namespace

ModelSpec read_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    ModelSpec spec;
    bool have_outcome = false;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string s = strip(line);
        if (s.empty() || s[0] == '#') continue;
        auto fail = [&](const std::string& why) -> void {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + why);
        };

        std::istringstream words(s);
        std::string kind, name;
        words >> kind;
        std::size_t tilde = s.find('~');
        if (tilde == std::string::npos) fail("expected '~'");
        {
            // optional column name between the keyword and '~'
            std::string head = strip(s.substr(kind.size(), tilde - kind.size()));
            name = head;
        }
        std::string rest = s.substr(tilde + 1);

        // trailing options: family=..., sigma=...
        Family family = Family::BernoulliLogit;
        double sigma = 1.0;
        bool sigma_fixed = false;
        for (const char* key : {"family=", "sigma="}) {
            std::size_t pos = rest.find(key);
            if (pos == std::string::npos) continue;
            std::size_t end = rest.find_first_of(" \t", pos);
            std::string value = rest.substr(pos + std::string(key).size(),
                                            end == std::string::npos ? std::string::npos
                                                                     : end - pos -
                                                                           std::string(key).size());
            if (std::string(key) == "family=") {
                if (value == "binomial")
                    family = Family::BernoulliLogit;
                else if (value == "gaussian")
                    family = Family::GaussianIdentity;
                else
                    fail("unknown family '" + value + "'");
            } else {
                sigma = to_double(value, "sigma");
                sigma_fixed = true;
            }
            rest = rest.substr(0, pos) + (end == std::string::npos ? "" : rest.substr(end));
        }
        TermList terms = parse_terms(rest);

        if (kind == "outcome") {
            if (have_outcome) fail("duplicate outcome model");
            if (!name.empty() && name != "y") fail("outcome column must be y");
            spec.outcome.terms = std::move(terms);
            spec.outcome.family = family;
            spec.outcome.sigma = sigma;
            spec.outcome.sigma_fixed = sigma_fixed;
            have_outcome = true;
        } else if (kind == "covariate") {
            if (name.empty()) fail("covariate model needs a column name");
            CovariateModel cm;
            cm.name = name;
            cm.terms = std::move(terms);
            cm.family = family;
            cm.sigma = sigma;
            cm.sigma_fixed = sigma_fixed;
            spec.covariate_models.push_back(std::move(cm));
        } else if (kind == "exposure") {
            if (!name.empty() && name != "x") fail("exposure column must be x");
            ExposureModel em;
            em.terms = std::move(terms);
            spec.exposure_model = std::move(em);
        } else {
            fail("unknown model kind '" + kind + "'");
        }
    }
    if (!have_outcome) throw std::runtime_error(path + ": no outcome model");
    return spec;
}

Prior parse_prior(const std::string& text) {
    std::string s = strip(text);
    auto args = [&](std::size_t open) {
        std::size_t close = s.rfind(')');
        if (close == std::string::npos || close < open)
            throw std::runtime_error("malformed prior: '" + text + "'");
        std::string inner = s.substr(open + 1, close - open - 1);
        std::size_t comma = inner.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("prior needs two arguments: '" + text + "'");
        return std::pair<double, double>{to_double(inner.substr(0, comma), "prior"),
                                         to_double(inner.substr(comma + 1), "prior")};
    };
    if (s == "flat") return Prior::flat();
    if (s.rfind("normal(", 0) == 0) {
        auto [mean, var] = args(6);
        return Prior::normal(mean, var);
    }
    if (s.rfind("dexp(", 0) == 0) {
        auto [mean, rate] = args(4);
        return Prior::double_exponential(mean, rate);
    }
    throw std::runtime_error("unknown prior '" + text + "' (expected normal(m,v), dexp(m,r), "
                             "or flat)");
}

PriorSpec read_prior_file(const std::string& path, const ModelSpec& spec) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open prior file: " + path);

    Prior default_prior = Prior::flat();
    Prior intercept_prior = Prior::flat();
    bool have_intercept = false;
    std::vector<std::tuple<std::string, int, Prior>> overrides;
    Prior log_sigma_prior = Prior::flat();

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string s = strip(line);
        if (s.empty() || s[0] == '#') continue;
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected 'key = value'");
        std::string key = strip(s.substr(0, eq));
        Prior prior = parse_prior(s.substr(eq + 1));
        if (key == "default") {
            default_prior = prior;
        } else if (key == "intercept") {
            intercept_prior = prior;
            have_intercept = true;
        } else if (key == "log_sigma") {
            log_sigma_prior = prior;
        } else {
            std::size_t dot = key.rfind('.');
            if (dot == std::string::npos)
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": unknown prior key '" + key + "'");
            std::string block = key.substr(0, dot);
            int index = static_cast<int>(to_double(key.substr(dot + 1), "coefficient index"));
            overrides.emplace_back(block, index, prior);
        }
    }

    PriorSpec out =
        default_priors(spec, have_intercept ? intercept_prior : default_prior, default_prior);
    out.log_sigma_prior = log_sigma_prior;

    auto block_index = [&](const std::string& label) -> int {
        if (label == "y") return 0;
        for (std::size_t j = 0; j < spec.covariate_models.size(); ++j)
            if (spec.covariate_models[j].name == label) return static_cast<int>(1 + j);
        throw std::runtime_error("prior override names unknown model '" + label + "'");
    };
    for (const auto& [label, index, prior] : overrides) {
        int b = block_index(label);
        if (index < 0 || index >= static_cast<int>(out.blocks[static_cast<std::size_t>(b)].size()))
            throw std::runtime_error("prior override index out of range: " + label + "." +
                                     std::to_string(index));
        out.blocks[static_cast<std::size_t>(b)][static_cast<std::size_t>(index)] = prior;
    }
    validate_priors(out, spec);
    return out;
}

} // namespace gformula
