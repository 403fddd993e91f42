#ifndef GFORMULA_PANEL_HPP
#define GFORMULA_PANEL_HPP

#include <string>
#include <string_view>
#include <vector>

namespace gformula {

// Rectangular subject-by-time dataset in long form. Each subject has
// contiguous times starting at 0. For a binary (survival) outcome a subject's
// rows stop after the first y = 1; the row carrying the event is retained.
// horizon is the number of follow-up times (k), 0 for time-fixed data.
struct Panel {
    int n_subjects = 0;
    int horizon = 0;
    bool y_binary = true;
    std::vector<std::string> cov_names;
    std::vector<char> cov_binary; // parallel to cov_names

    std::vector<int> offsets; // n_subjects + 1 entries into the row arrays
    std::vector<int> times;
    std::vector<double> y;
    std::vector<double> x;
    std::vector<std::vector<double>> covs; // covs[c][row]

    int rows() const { return static_cast<int>(times.size()); }
    int subject_rows(int subject) const { return offsets[subject + 1] - offsets[subject]; }

    // row index of (subject, t), or -1 when the subject has exited before t.
    // Relies on the contiguous-times invariant.
    int row_at(int subject, int t) const {
        return t < subject_rows(subject) ? offsets[subject] + t : -1;
    }

    int cov_index(std::string_view name) const {
        for (std::size_t c = 0; c < cov_names.size(); ++c)
            if (cov_names[c] == name) return static_cast<int>(c);
        return -1;
    }

    // subjects still at risk (row present) at time t
    std::vector<int> at_risk(int t) const {
        std::vector<int> out;
        for (int i = 0; i < n_subjects; ++i)
            if (row_at(i, t) >= 0) out.push_back(i);
        return out;
    }
};

// Incremental construction; finish() computes offsets/horizon.
class PanelBuilder {
public:
    PanelBuilder(std::vector<std::string> cov_names, std::vector<char> cov_binary,
                 bool y_binary = true);

    void start_subject();
    void add_row(int t, double y, double x, const std::vector<double>& cov_values);
    Panel finish();

private:
    Panel panel_;
};

struct PanelViolation {
    std::string message;
    int subject = -1; // -1 when not tied to a subject
    int time = -1;
};

// Checks every Panel invariant and reports all violations with their
// location; an empty result means the panel is well formed.
std::vector<PanelViolation> validate_panel(const Panel& panel);

// CSV I/O, long format: header `id,time,y,x,<covariate names>`. Columns are
// typed at load; names listed in real_columns (which may include "y") are
// real-valued, everything else is binary.
struct ColumnTypes {
    std::vector<std::string> real_columns;
};

Panel read_panel_csv(const std::string& path, const ColumnTypes& types = {});
// metadata entries become leading '# key = value' lines
void write_panel_csv(const Panel& panel, const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& metadata = {});

} // namespace gformula

#endif
