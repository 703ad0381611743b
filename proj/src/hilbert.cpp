#include "stq/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "stq/errors.hpp"
#include "stq/units.hpp"

namespace stq {

ModeSubset::ModeSubset(const DeviceSpec& device, std::vector<std::string> ids)
    : ids_(std::move(ids)) {
    if (ids_.empty()) {
        throw InputError("empty-subset", "mode subset must not be empty");
    }
    for (const auto& id : ids_) {
        if (!device.has_mode(id)) {
            throw InputError("unknown-mode", "subset mode '" + id + "' is not in the device");
        }
        if (std::count(ids_.begin(), ids_.end(), id) != 1) {
            throw InputError("duplicate-subset-mode", "mode '" + id + "' listed twice in subset");
        }
        modes_.push_back(device.mode(id));
        levels_.push_back(modes_.back().levels);
    }
    strides_.assign(ids_.size(), 1);
    for (std::size_t k = ids_.size(); k-- > 0;) {
        strides_[k] = dimension_;
        dimension_ *= static_cast<std::size_t>(levels_[k]);
        if (dimension_ > max_subset_dimension) {
            throw InputError("dimension-cap", "subset dimension exceeds " +
                                                  std::to_string(max_subset_dimension));
        }
    }
    for (const auto& c : device.couplings()) {
        if (contains(c.a) && contains(c.b)) {
            couplings_.push_back(c);
        }
    }
}

bool ModeSubset::contains(const std::string& id) const {
    return std::find(ids_.begin(), ids_.end(), id) != ids_.end();
}

std::size_t ModeSubset::position(const std::string& id) const {
    const auto it = std::find(ids_.begin(), ids_.end(), id);
    if (it == ids_.end()) {
        throw InputError("unknown-mode", "mode '" + id + "' is not in the subset");
    }
    return static_cast<std::size_t>(it - ids_.begin());
}

std::size_t ModeSubset::index_of(std::span<const int> occupation) const {
    if (occupation.size() != ids_.size()) {
        throw InputError("bad-occupation", "occupation length does not match subset");
    }
    std::size_t index = 0;
    for (std::size_t k = 0; k < occupation.size(); ++k) {
        if (occupation[k] < 0 || occupation[k] >= levels_[k]) {
            throw InputError("bad-occupation", "occupation outside truncation");
        }
        index += strides_[k] * static_cast<std::size_t>(occupation[k]);
    }
    return index;
}

Occupation ModeSubset::occupation(std::size_t index) const {
    Occupation n(ids_.size());
    for (std::size_t k = 0; k < ids_.size(); ++k) {
        n[k] = static_cast<int>((index / strides_[k]) % static_cast<std::size_t>(levels_[k]));
    }
    return n;
}

Occupation ModeSubset::excite(std::initializer_list<std::pair<std::string, int>> quanta) const {
    Occupation n(ids_.size(), 0);
    for (const auto& [id, count] : quanta) {
        n[position(id)] = count;
    }
    return n;
}

std::vector<std::size_t> ModeSubset::canonical_order() const {
    std::vector<std::size_t> order(dimension_);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<int> total(dimension_);
    for (std::size_t i = 0; i < dimension_; ++i) {
        const auto n = occupation(i);
        total[i] = std::accumulate(n.begin(), n.end(), 0);
    }
    // Row-major indices are already lexicographic, so a stable sort on the
    // excitation count gives (excitation, lexicographic) order.
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return total[a] < total[b]; });
    return order;
}

Eigen::VectorXd ModeSubset::number_diagonal(std::size_t mode_position) const {
    Eigen::VectorXd n(static_cast<Eigen::Index>(dimension_));
    for (std::size_t i = 0; i < dimension_; ++i) {
        n(static_cast<Eigen::Index>(i)) =
            static_cast<double>((i / strides_[mode_position]) %
                                static_cast<std::size_t>(levels_[mode_position]));
    }
    return n;
}

double HermitianOperator::hermiticity_defect() const {
    const double scale = matrix.cwiseAbs().maxCoeff();
    if (scale == 0.0) {
        return 0.0;
    }
    return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff() / scale;
}

Eigen::MatrixXcd lowering_operator(const ModeSubset& subset, std::size_t mode_position) {
    const auto dim = static_cast<Eigen::Index>(subset.dimension());
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
    for (std::size_t i = 0; i < subset.dimension(); ++i) {
        auto n = subset.occupation(i);
        const int k = n[mode_position];
        if (k == 0) {
            continue;
        }
        n[mode_position] = k - 1;
        a(static_cast<Eigen::Index>(subset.index_of(n)), static_cast<Eigen::Index>(i)) =
            std::sqrt(static_cast<double>(k));
    }
    return a;
}

HermitianOperator build_hamiltonian(const DeviceSpec& device, const ModeSubset& subset,
                                    const FluxBias& bias, CouplingForm form) {
    for (const auto& [id, flux] : bias.flux) {
        if (!std::isfinite(flux)) {
            throw InputError("non-finite-flux", "non-finite flux for mode '" + id + "'");
        }
    }
    const std::size_t dim = subset.dimension();
    const std::size_t modes = subset.size();
    std::vector<double> omega(modes);
    std::vector<double> alpha(modes);
    for (std::size_t k = 0; k < modes; ++k) {
        omega[k] = units::angular(device.frequency_ghz(subset.ids()[k], bias));
        alpha[k] = units::angular(subset.modes()[k].anharmonicity_ghz);
    }

    HermitianOperator h{Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim),
                                               static_cast<Eigen::Index>(dim))};
    std::vector<Occupation> occ(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        occ[i] = subset.occupation(i);
        double e = 0.0;
        for (std::size_t k = 0; k < modes; ++k) {
            const double n = occ[i][k];
            e += omega[k] * n + 0.5 * alpha[k] * n * (n - 1.0);
        }
        h.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = e;
    }

    const auto& levels = subset.levels();
    for (const auto& c : subset.couplings()) {
        const double g = units::angular(device.coupling_ghz(c, bias));
        if (g == 0.0) {
            continue;
        }
        const std::size_t j = subset.position(c.a);
        const std::size_t k = subset.position(c.b);
        for (std::size_t col = 0; col < dim; ++col) {
            const auto& n = occ[col];
            // dj, dk in {-1,+1}: a^dagger raises, a lowers.
            for (const int dj : {-1, 1}) {
                for (const int dk : {-1, 1}) {
                    if (form == CouplingForm::rotating_wave && dj == dk) {
                        continue;
                    }
                    const int nj = n[j] + dj;
                    const int nk = n[k] + dk;
                    if (nj < 0 || nk < 0 || nj >= levels[j] || nk >= levels[k]) {
                        continue;
                    }
                    const double amp = std::sqrt(static_cast<double>(std::max(n[j], nj))) *
                                       std::sqrt(static_cast<double>(std::max(n[k], nk)));
                    Occupation target = n;
                    target[j] = nj;
                    target[k] = nk;
                    h.matrix(static_cast<Eigen::Index>(subset.index_of(target)),
                             static_cast<Eigen::Index>(col)) += g * amp;
                }
            }
        }
    }
    return h;
}

LabeledSpectrum::LabeledSpectrum(Eigen::VectorXd eigenvalues, Eigen::MatrixXcd eigenvectors,
                                 std::map<Occupation, std::size_t> labels,
                                 std::map<Occupation, double> overlaps)
    : eigenvalues_(std::move(eigenvalues)),
      eigenvectors_(std::move(eigenvectors)),
      labels_(std::move(labels)),
      overlaps_(std::move(overlaps)) {}

std::size_t LabeledSpectrum::index(const Occupation& bare) const {
    const auto it = labels_.find(bare);
    if (it == labels_.end()) {
        throw InputError("unlabeled-state", "no dressed state labeled with requested occupation");
    }
    return it->second;
}

double LabeledSpectrum::energy(const Occupation& bare) const {
    return eigenvalues_(static_cast<Eigen::Index>(index(bare)));
}

Eigen::VectorXcd LabeledSpectrum::vector(const Occupation& bare) const {
    return eigenvectors_.col(static_cast<Eigen::Index>(index(bare)));
}

double LabeledSpectrum::overlap(const Occupation& bare) const {
    (void)index(bare);  // throws for unknown labels
    return overlaps_.at(bare);
}

LabeledSpectrum eigensystem(const HermitianOperator& h, const ModeSubset& subset,
                            std::optional<int> max_excitation) {
    const auto dim = static_cast<Eigen::Index>(h.dimension());
    if (h.dimension() != subset.dimension()) {
        throw InputError("dimension-mismatch", "operator and subset dimensions differ");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h.matrix);
    if (solver.info() != Eigen::Success) {
        const double norm = h.matrix.cwiseAbs().maxCoeff();
        throw PhysicsError("eigensolver-failed",
                           "Hermitian eigensolver did not converge (dimension " +
                               std::to_string(dim) + ", max|H| " + std::to_string(norm) + ")");
    }
    Eigen::VectorXd values = solver.eigenvalues();
    Eigen::MatrixXcd vectors = solver.eigenvectors();

    // Largest-magnitude component real positive; first index wins ties.
    for (Eigen::Index c = 0; c < dim; ++c) {
        Eigen::Index best = 0;
        double best_mag = -1.0;
        for (Eigen::Index r = 0; r < dim; ++r) {
            const double mag = std::abs(vectors(r, c));
            if (mag > best_mag * (1.0 + 1e-12)) {
                best_mag = mag;
                best = r;
            }
        }
        const auto phase = vectors(best, c) / std::abs(vectors(best, c));
        vectors.col(c) *= std::conj(phase);
    }

    const auto order = subset.canonical_order();
    std::vector<std::size_t> rank_of(subset.dimension());
    std::vector<std::size_t> requested;
    for (std::size_t r = 0; r < order.size(); ++r) {
        rank_of[order[r]] = r;
        if (max_excitation) {
            const auto n = subset.occupation(order[r]);
            if (std::accumulate(n.begin(), n.end(), 0) > *max_excitation) {
                continue;
            }
        }
        requested.push_back(order[r]);
    }

    struct Candidate {
        double overlap;
        std::size_t bare;
        Eigen::Index eig;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(requested.size() * static_cast<std::size_t>(dim));
    for (const auto bare : requested) {
        for (Eigen::Index e = 0; e < dim; ++e) {
            candidates.push_back({std::norm(vectors(static_cast<Eigen::Index>(bare), e)), bare, e});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
        if (a.overlap != b.overlap) {
            return a.overlap > b.overlap;
        }
        if (a.bare != b.bare) {
            return rank_of[a.bare] < rank_of[b.bare];
        }
        return a.eig < b.eig;
    });

    std::vector<bool> bare_used(subset.dimension(), false);
    std::vector<bool> eig_used(static_cast<std::size_t>(dim), false);
    std::map<Occupation, std::size_t> labels;
    std::map<Occupation, double> overlaps;
    std::size_t assigned = 0;
    for (const auto& c : candidates) {
        if (assigned == requested.size()) {
            break;
        }
        if (bare_used[c.bare] || eig_used[static_cast<std::size_t>(c.eig)]) {
            continue;
        }
        bare_used[c.bare] = true;
        eig_used[static_cast<std::size_t>(c.eig)] = true;
        const auto occ = subset.occupation(c.bare);
        labels[occ] = static_cast<std::size_t>(c.eig);
        overlaps[occ] = c.overlap;
        ++assigned;
    }
    return LabeledSpectrum(std::move(values), std::move(vectors), std::move(labels),
                           std::move(overlaps));
}

}  // namespace stq
