#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stq/device.hpp"

namespace stq {

using Occupation = std::vector<int>;

/// Ordered selection of device modes. The order fixes the tensor-product
/// layout: the first mode is the most significant digit of a basis index.
class ModeSubset {
public:
    ModeSubset(const DeviceSpec& device, std::vector<std::string> ids);

    [[nodiscard]] const std::vector<std::string>& ids() const { return ids_; }
    [[nodiscard]] const std::vector<ModeSpec>& modes() const { return modes_; }
    [[nodiscard]] const std::vector<int>& levels() const { return levels_; }
    [[nodiscard]] const std::vector<CouplingSpec>& couplings() const { return couplings_; }
    [[nodiscard]] std::size_t size() const { return ids_.size(); }
    [[nodiscard]] std::size_t dimension() const { return dimension_; }

    [[nodiscard]] std::size_t position(const std::string& id) const;
    [[nodiscard]] bool contains(const std::string& id) const;
    [[nodiscard]] std::size_t index_of(std::span<const int> occupation) const;
    [[nodiscard]] Occupation occupation(std::size_t index) const;
    /// Occupation with a single mode raised to `n`, everything else empty.
    [[nodiscard]] Occupation excite(std::initializer_list<std::pair<std::string, int>> quanta) const;

    /// Bare basis indices ordered by total excitation, then lexicographically.
    [[nodiscard]] std::vector<std::size_t> canonical_order() const;

    /// Number operator diagonal and lowering-operator structure of one mode.
    [[nodiscard]] Eigen::VectorXd number_diagonal(std::size_t mode_position) const;

private:
    std::vector<std::string> ids_;
    std::vector<ModeSpec> modes_;
    std::vector<int> levels_;
    std::vector<std::size_t> strides_;
    std::vector<CouplingSpec> couplings_;
    std::size_t dimension_ = 1;
};

inline constexpr std::size_t max_subset_dimension = 4096;

struct HermitianOperator {
    Eigen::MatrixXcd matrix;

    [[nodiscard]] std::size_t dimension() const { return static_cast<std::size_t>(matrix.rows()); }
    /// max|H - H^dagger| relative to max|H|.
    [[nodiscard]] double hermiticity_defect() const;
};

enum class CouplingForm { full_transverse, rotating_wave };

/// H = sum_k w_k n_k + (a_k/2) n_k(n_k-1) + sum_edges g X_j X_k  (rad/ns),
/// with X = a + a^dagger (full) or the exchange form (rotating_wave).
HermitianOperator build_hamiltonian(const DeviceSpec& device, const ModeSubset& subset,
                                    const FluxBias& bias,
                                    CouplingForm form = CouplingForm::full_transverse);

/// Dense lowering operator of one subset mode.
Eigen::MatrixXcd lowering_operator(const ModeSubset& subset, std::size_t mode_position);

/// Eigenpairs of a Hermitian operator with each eigenvector tagged by the bare
/// occupation it overlaps most (greedy, descending overlap).
class LabeledSpectrum {
public:
    LabeledSpectrum(Eigen::VectorXd eigenvalues, Eigen::MatrixXcd eigenvectors,
                    std::map<Occupation, std::size_t> labels,
                    std::map<Occupation, double> overlaps);

    [[nodiscard]] const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
    [[nodiscard]] const Eigen::MatrixXcd& eigenvectors() const { return eigenvectors_; }
    [[nodiscard]] const std::map<Occupation, std::size_t>& labels() const { return labels_; }

    [[nodiscard]] bool has_label(const Occupation& bare) const { return labels_.count(bare) != 0; }
    [[nodiscard]] std::size_t index(const Occupation& bare) const;
    [[nodiscard]] double energy(const Occupation& bare) const;
    [[nodiscard]] Eigen::VectorXcd vector(const Occupation& bare) const;
    /// |<bare|dressed>|^2 of the assignment.
    [[nodiscard]] double overlap(const Occupation& bare) const;

private:
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXcd eigenvectors_;
    std::map<Occupation, std::size_t> labels_;
    std::map<Occupation, double> overlaps_;
};

/// Diagonalizes `h` and labels eigenvectors. `max_excitation` restricts which
/// bare tuples are requested as labels (all of them when unset).
LabeledSpectrum eigensystem(const HermitianOperator& h, const ModeSubset& subset,
                            std::optional<int> max_excitation = std::nullopt);

}  // namespace stq
