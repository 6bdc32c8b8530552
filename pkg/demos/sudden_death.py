"""Entanglement sudden death while synchronization survives.

Starts from the equatorial product state, integrates the hierarchy and
prints the logarithmic negativity, mutual information and peak
synchronization at a few times.

Run: python3 demos/sudden_death.py
"""

import numpy as np

from qsync import BathSpec, SystemModel, evolve, max_sync, mutual_information, negativity_measures
from qsync.heom import hierarchy_space
from qsync.states import equatorial_product


def main() -> None:
    model = SystemModel(delta=0.001, h=-1.0)
    bath = BathSpec(lam=0.05, gamma=0.2, beta=0.3, m_cut=2)
    traj = evolve(equatorial_product(), model, bath, hierarchy_space(bath, 6),
                  t_final=10.0, sample_every=50)
    print(f"{'t':>6} {'E':>10} {'I':>8} {'max S_r':>8}")
    for t, rho in zip(traj.times, traj.rho):
        e = negativity_measures(rho)[1]
        print(f"{t:6.2f} {e:10.2e} {mutual_information(rho):8.4f} {max_sync(rho)[0]:8.4f}")
    e = np.array([negativity_measures(r)[1] for r in traj.rho])
    dead = traj.times[(e < 1e-8) & (traj.times > 0)]
    if dead.size:
        print(f"entanglement first vanishes at t = {dead[0]:.2f}")


if __name__ == "__main__":
    main()
