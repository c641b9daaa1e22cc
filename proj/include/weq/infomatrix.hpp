#pragma once

#include <string_view>
#include <vector>

#include "weq/corpus.hpp"
#include "weq/sparse.hpp"

namespace weq {

enum class InfoKind { pmi, ppmi, spmi, sppmi };

const char* info_kind_name(InfoKind k);
InfoKind info_kind_from_name(std::string_view name);

struct InfoMatrixSpec {
    InfoKind kind = InfoKind::ppmi;
    double shift = 5.0;  // kappa; only read by the shifted variants, must be >= 1
};

struct Marginals {
    std::vector<double> row_sums;  // weighted #(c)
    double total = 0.0;            // |P|
};

Marginals marginals(const SparseMatrix& x);
inline Marginals marginals(const CooccurrenceCounts& x) { return marginals(x.matrix); }

// Entry (c,w) is ln(#(c,w)·|P| / (#(c)·#(w))) minus ln(kappa) for the shifted
// variants; the p-variants clamp at zero. Values that clamp or land exactly on
// zero are not stored.
SparseMatrix build_info_matrix(const SparseMatrix& x, const InfoMatrixSpec& spec);
inline SparseMatrix build_info_matrix(const CooccurrenceCounts& x, const InfoMatrixSpec& spec) {
    return build_info_matrix(x.matrix, spec);
}

}  // namespace weq
