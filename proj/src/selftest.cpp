#include "longgreeks/checks.hpp"
#include "longgreeks/cli.hpp"

namespace longgreeks::cli {

std::vector<SelftestRow> selftest(std::uint64_t seed, int threads) {
    std::vector<SelftestRow> rows;
    auto add = [&](const char* name, const checks::CheckResult& r) {
        rows.push_back({name, r.pass, r.measured, r.detail});
    };
    add("eigenpair_residual", checks::eigenpair_defect());
    add("riccati_property_suite", checks::riccati_suite(seed));
    add("density_normalization", checks::density_normalization());
    add("decomposition_identity", checks::decomposition(20000, seed, {1.0, 5.0}, threads));
    return rows;
}

}  // namespace longgreeks::cli
