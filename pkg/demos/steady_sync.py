"""Steady-state phase locking of two detuned qutrits in a shared bath.

Computes the long-time limit of the hierarchy, prints the peak of the
synchronization measure and checks that it is stable under a deeper
truncation.

Run: python3 demos/steady_sync.py
"""

import numpy as np

from qsync import BathSpec, SystemModel, max_sync, measure_report, stationary_state
from qsync.heom import hierarchy_space


def main() -> None:
    model = SystemModel(delta=0.01, h=-1.0)
    for m_cut, tier_cap in [(2, 4), (2, 6)]:
        bath = BathSpec(lam=0.05, gamma=2.0, beta=0.3, m_cut=m_cut)
        res = stationary_state(model, bath, hierarchy_space(bath, tier_cap))
        peak, phi = max_sync(res.rho)
        print(f"(M, N_c) = ({m_cut}, {tier_cap}): max S_r = {peak:.8f} at phi = {phi:+.4f}, "
              f"unique = {res.converged}")

    rep = measure_report(res.rho)
    print(f"log negativity {rep.log_negativity:.2e}, mutual information {rep.mutual_information:.4f}")
    # the curve integrates to zero over a full period
    print(f"mean of S_r over the phase grid: {np.mean(rep.s_r):.1e}")


if __name__ == "__main__":
    main()
