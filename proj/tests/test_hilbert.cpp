#include <doctest.h>

#include "stq/errors.hpp"
#include "stq/hilbert.hpp"
#include "stq/statics.hpp"
#include "support.hpp"

using namespace stq;

TEST_SUITE("hilbert") {

TEST_CASE("index arithmetic round-trips") {
    const ModeSubset subset(testing::paper_like(), {"Q2", "C_23", "Q3"});
    CHECK(subset.dimension() == 27);
    for (std::size_t i = 0; i < subset.dimension(); ++i) {
        CHECK(subset.index_of(subset.occupation(i)) == i);
    }
    const auto occ = subset.excite({{"Q3", 2}});
    CHECK(subset.index_of(occ) == static_cast<std::size_t>(testing::occupation_index({3, 3, 3}, {0, 0, 2})));
    const auto order = subset.canonical_order();
    CHECK(order.front() == 0);
    CHECK(order.size() == subset.dimension());
}

TEST_CASE("Hamiltonian equals an independent Kronecker assembly") {
    const auto& device = testing::paper_like();
    const std::vector<std::string> ids{"Q3", "C_37", "Q7"};
    const ModeSubset subset(device, ids);
    const FluxBias bias = FluxBias{}.set("C_37", 0.15).set("Q3", 0.07);
    for (const auto form : {CouplingForm::full_transverse, CouplingForm::rotating_wave}) {
        const auto h = build_hamiltonian(device, subset, bias, form);
        const auto oracle =
            testing::kronecker_hamiltonian(device, ids, device.idle_bias().merged(bias),
                                           form == CouplingForm::rotating_wave);
        CHECK((h.matrix - oracle).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(h.hermiticity_defect() < 1e-15);
    }
}

TEST_CASE("labeled energies agree with a general eigensolver") {
    const auto& device = testing::paper_like();
    const std::vector<std::string> ids{"Q2", "C_23", "Q3"};
    const ModeSubset subset(device, ids);
    const auto h = build_hamiltonian(device, subset, device.idle_bias());
    const auto spectrum = eigensystem(h, subset, 2);
    for (const Occupation& occ : {Occupation{0, 0, 0}, Occupation{1, 0, 0}, Occupation{0, 0, 1},
                                  Occupation{1, 0, 1}, Occupation{0, 1, 0}}) {
        const int bare = testing::occupation_index(subset.levels(), occ);
        CHECK(spectrum.energy(occ) == doctest::Approx(testing::reference_energy(h.matrix, bare)).epsilon(1e-10));
        CHECK(spectrum.overlap(occ) > 0.5);
    }
    CHECK_THROWS_AS((void)spectrum.index({9, 9, 9}), InputError);
}

TEST_CASE("lowering operator") {
    const ModeSubset subset(testing::paper_like(), {"Q3", "Q4"});
    const auto a = lowering_operator(subset, 1);
    const auto n = subset.number_diagonal(1);
    CHECK(((a.adjoint() * a).diagonal().real() - n).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("oversized subsets are rejected") {
    const auto big = testing::paper_like().with_uniform_levels(5);
    CHECK_THROWS_AS(ModeSubset(big, {"Q1", "Q2", "Q3", "Q4", "Q5", "Q6"}), InputError);
}

}
