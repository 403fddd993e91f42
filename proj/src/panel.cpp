#include "gformula/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace gformula {

PanelBuilder::PanelBuilder(std::vector<std::string> cov_names, std::vector<char> cov_binary,
                           bool y_binary) {
    if (cov_names.size() != cov_binary.size())
        throw std::invalid_argument("PanelBuilder: cov_names/cov_binary size mismatch");
    panel_.cov_names = std::move(cov_names);
    panel_.cov_binary = std::move(cov_binary);
    panel_.y_binary = y_binary;
    panel_.covs.resize(panel_.cov_names.size());
    panel_.offsets.push_back(0);
}

void PanelBuilder::start_subject() {
    panel_.n_subjects += 1;
    panel_.offsets.push_back(panel_.rows());
}

void PanelBuilder::add_row(int t, double y, double x, const std::vector<double>& cov_values) {
    if (panel_.n_subjects == 0)
        throw std::logic_error("PanelBuilder: add_row before start_subject");
    if (cov_values.size() != panel_.covs.size())
        throw std::invalid_argument("PanelBuilder: covariate count mismatch");
    panel_.times.push_back(t);
    panel_.y.push_back(y);
    panel_.x.push_back(x);
    for (std::size_t c = 0; c < cov_values.size(); ++c) panel_.covs[c].push_back(cov_values[c]);
    panel_.offsets.back() = panel_.rows();
}

Panel PanelBuilder::finish() {
    int k = 0;
    for (int t : panel_.times) k = std::max(k, t);
    panel_.horizon = k;
    return std::move(panel_);
}

namespace {

bool is_binary_value(double v) { return v == 0.0 || v == 1.0; }

void check_column(const Panel& p, const std::vector<double>& col, const std::string& name,
                  bool binary, std::vector<PanelViolation>& out) {
    for (int i = 0; i < p.n_subjects; ++i) {
        for (int r = p.offsets[i]; r < p.offsets[i + 1]; ++r) {
            double v = col[r];
            if (!std::isfinite(v)) {
                out.push_back({"missing or non-finite value in column " + name, i, p.times[r]});
            } else if (binary && !is_binary_value(v)) {
                out.push_back({"non-binary value " + std::to_string(v) + " in binary column " +
                                   name,
                               i, p.times[r]});
            }
        }
    }
}

} // namespace

std::vector<PanelViolation> validate_panel(const Panel& p) {
    std::vector<PanelViolation> out;
    if (static_cast<int>(p.offsets.size()) != p.n_subjects + 1) {
        out.push_back({"offsets size does not match subject count", -1, -1});
        return out;
    }
    for (int i = 0; i < p.n_subjects; ++i) {
        int nrows = p.offsets[i + 1] - p.offsets[i];
        if (nrows <= 0) {
            out.push_back({"subject has no rows", i, -1});
            continue;
        }
        for (int r = p.offsets[i]; r < p.offsets[i + 1]; ++r) {
            int expected = r - p.offsets[i];
            if (p.times[r] != expected) {
                out.push_back({"times not contiguous from 0 (found " +
                                   std::to_string(p.times[r]) + ", expected " +
                                   std::to_string(expected) + ")",
                               i, p.times[r]});
                break;
            }
        }
        if (p.y_binary) {
            // once y = 1, no later rows for the subject
            for (int r = p.offsets[i]; r < p.offsets[i + 1] - 1; ++r) {
                if (p.y[r] == 1.0) {
                    out.push_back({"rows present after first event", i, p.times[r]});
                    break;
                }
            }
        }
    }
    check_column(p, p.y, "y", p.y_binary, out);
    check_column(p, p.x, "x", true, out);
    for (std::size_t c = 0; c < p.covs.size(); ++c)
        check_column(p, p.covs[c], p.cov_names[c], p.cov_binary[c] != 0, out);
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& s, const std::string& what, int line_no) {
    double v = 0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc{})
        throw std::runtime_error("malformed " + what + " at line " + std::to_string(line_no) +
                                 ": '" + s + "'");
    return v;
}

} // namespace

Panel read_panel_csv(const std::string& path, const ColumnTypes& types) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open panel file: " + path);

    auto is_real = [&](const std::string& name) {
        return std::find(types.real_columns.begin(), types.real_columns.end(), name) !=
               types.real_columns.end();
    };

    std::string line;
    int line_no = 0;
    // skip metadata comments before the header
    do {
        if (!std::getline(in, line)) throw std::runtime_error("empty panel file: " + path);
        ++line_no;
    } while (!line.empty() && line[0] == '#');

    auto header = split_csv_line(line);
    if (header.size() < 4 || header[0] != "id" || header[1] != "time" || header[2] != "y" ||
        header[3] != "x")
        throw std::runtime_error("panel header must start with id,time,y,x");

    std::vector<std::string> cov_names(header.begin() + 4, header.end());
    std::vector<char> cov_binary;
    for (const auto& n : cov_names) cov_binary.push_back(is_real(n) ? 0 : 1);

    PanelBuilder builder(cov_names, cov_binary, !is_real("y"));
    long long current_id = -1;
    bool any = false;
    std::vector<double> cov_values(cov_names.size());
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw std::runtime_error("wrong field count at line " + std::to_string(line_no));
        long long id = static_cast<long long>(parse_double(fields[0], "id", line_no));
        int t = static_cast<int>(parse_double(fields[1], "time", line_no));
        double yv = parse_double(fields[2], "y", line_no);
        double xv = parse_double(fields[3], "x", line_no);
        for (std::size_t c = 0; c < cov_names.size(); ++c)
            cov_values[c] = parse_double(fields[4 + c], cov_names[c], line_no);
        if (!any || id != current_id) {
            builder.start_subject();
            current_id = id;
            any = true;
        }
        builder.add_row(t, yv, xv, cov_values);
    }
    return builder.finish();
}

void write_panel_csv(const Panel& panel, const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& metadata) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write panel file: " + path);
    for (const auto& [key, value] : metadata) out << "# " << key << " = " << value << '\n';
    out << "id,time,y,x";
    for (const auto& n : panel.cov_names) out << ',' << n;
    out << '\n';
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf;
    };
    for (int i = 0; i < panel.n_subjects; ++i) {
        for (int r = panel.offsets[i]; r < panel.offsets[i + 1]; ++r) {
            out << i << ',' << panel.times[r] << ',';
            put(panel.y[r]);
            out << ',';
            put(panel.x[r]);
            for (const auto& col : panel.covs) {
                out << ',';
                put(col[r]);
            }
            out << '\n';
        }
    }
}

} // namespace gformula
