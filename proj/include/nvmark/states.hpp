#pragma once

// Initial states used by the bundled scenarios.

#include <cmath>
#include <sstream>

#include "nvmark/hilbert.hpp"

namespace nvm {

/// (|00> + |11>) / sqrt(2) as a density matrix on [qubit, qubit].
inline DensityMatrix bell_state()
{
    StateVector v = StateVector::Zero(4);
    v(0) = v(3) = 1.0 / std::sqrt(2.0);
    return validate_density(projector(v));
}

/// D(alpha) S(xi) |0> on n_c Fock levels.
inline StateVector squeezed_coherent_vector(Complex alpha, Complex xi, int n_c)
{
    StateVector vac = StateVector::Zero(n_c);
    vac(0) = 1.0;
    const StateVector v = displacement(alpha, n_c) * (squeeze(xi, n_c) * vac);
    const double top = std::norm(v(n_c - 1));
    if (!(top <= FOCK_LEAKAGE_LIMIT)) {
        std::ostringstream msg;
        msg << "squeezed coherent state: population " << top << " in Fock level " << n_c - 1 << " exceeds "
            << FOCK_LEAKAGE_LIMIT << "; increase the truncation dimension";
        throw TruncationError(msg.str());
    }
    return v;
}

/// <(xi1, alpha1) | (xi2, alpha2)>.
inline Complex scs_branch_overlap(Complex alpha1, Complex xi1, Complex alpha2, Complex xi2, int n_c)
{
    return squeezed_coherent_vector(alpha1, xi1, n_c).dot(squeezed_coherent_vector(alpha2, xi2, n_c));
}

/// Hybrid state (|0>|xi1, alpha1> + |1>|xi2, alpha2>), normalized by its actual
/// norm since the two branches overlap. Layout [qubit, mode(n_c)].
inline DensityMatrix qubit_scs_state(Complex alpha1, Complex xi1, Complex alpha2, Complex xi2, int n_c)
{
    const StateVector b1 = squeezed_coherent_vector(alpha1, xi1, n_c);
    const StateVector b2 = squeezed_coherent_vector(alpha2, xi2, n_c);
    StateVector v(2 * n_c);
    v.head(n_c) = b1;
    v.tail(n_c) = b2;
    v /= v.norm();
    return validate_density(projector(v));
}

} // namespace nvm
