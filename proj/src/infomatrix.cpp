#include "weq/infomatrix.hpp"

#include <cmath>

#include "weq/error.hpp"

namespace weq {

const char* info_kind_name(InfoKind k) {
    switch (k) {
        case InfoKind::pmi: return "pmi";
        case InfoKind::ppmi: return "ppmi";
        case InfoKind::spmi: return "spmi";
        case InfoKind::sppmi: break;
    }
    return "sppmi";
}

InfoKind info_kind_from_name(std::string_view name) {
    if (name == "pmi") return InfoKind::pmi;
    if (name == "ppmi") return InfoKind::ppmi;
    if (name == "spmi") return InfoKind::spmi;
    if (name == "sppmi") return InfoKind::sppmi;
    throw validation_error("unknown information matrix kind '" + std::string(name) + "'");
}

Marginals marginals(const SparseMatrix& x) {
    if (x.nnz() == 0) throw compute_error("empty co-occurrence matrix");
    Marginals m;
    m.row_sums.resize(x.n_rows(), 0.0);
    double total = 0.0;
    for (std::size_t r = 0; r < x.n_rows(); ++r) {
        double s = 0.0;
        for (double v : x.row_values(r)) s += v;
        m.row_sums[r] = s;
        total += s;
    }
    m.total = total;
    return m;
}

SparseMatrix build_info_matrix(const SparseMatrix& x, const InfoMatrixSpec& spec) {
    const bool shifted = spec.kind == InfoKind::spmi || spec.kind == InfoKind::sppmi;
    const bool positive = spec.kind == InfoKind::ppmi || spec.kind == InfoKind::sppmi;
    if (shifted && !(spec.shift >= 1.0))
        throw validation_error("shift parameter must be >= 1");

    const Marginals m = marginals(x);
    if (!(m.total > 0.0)) throw compute_error("nonpositive total pair mass");
    const double log_shift = shifted ? std::log(spec.shift) : 0.0;

    SparseBuilder out(x.n_rows(), x.n_cols(), x.nnz());
    std::vector<std::uint32_t> cols;
    std::vector<double> vals;
    for (std::size_t r = 0; r < x.n_rows(); ++r) {
        cols.clear();
        vals.clear();
        const auto rc = x.row_cols(r);
        const auto rv = x.row_values(r);
        const double mc = m.row_sums[r];
        if (!rc.empty() && !(mc > 0.0))
            throw compute_error("nonpositive marginal for a row with entries");
        for (std::size_t j = 0; j < rc.size(); ++j) {
            const double mw = m.row_sums[rc[j]];
            if (!(mw > 0.0)) throw compute_error("nonpositive marginal for a column with entries");
            const double value = std::log(rv[j] * m.total / (mc * mw)) - log_shift;
            if (positive ? value > 0.0 : value != 0.0) {
                cols.push_back(rc[j]);
                vals.push_back(value);
            }
        }
        out.append_row(cols, vals);
    }
    return out.finish();
}

}  // namespace weq
