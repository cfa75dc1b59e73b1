from __future__ import annotations

from hypothesis import strategies as st

from ensemble_cosched.model import AnalysisSpec, Ensemble, Partition, Platform, SimulationSpec

GB = 1e9


def small_ensemble(sim_times=(100.0,), analyses=((60.0, 2 * GB),), n_steps=1) -> Ensemble:
    """Analyses given per simulation as (seq_time, volume); round-robin if flat."""
    sims = tuple(SimulationSpec(f"S{i}", t) for i, t in enumerate(sim_times, 1))
    out = []
    for k, (t, v) in enumerate(analyses):
        i = k % len(sims)
        out.append(AnalysisSpec(f"A{k + 1}", t, v, sims[i].id))
    return Ensemble(sims, tuple(out), n_steps)


def platform(N=16, C=32, M=128 * GB, B=10 * GB) -> Platform:
    return Platform(N, C, M, B)


@st.composite
def instances(draw, max_sims=4, max_per_sim=4, uniform_volume=False, min_volume=0.0):
    """A random ensemble, a random partition of it, and a platform with enough nodes."""
    n_sims = draw(st.integers(1, max_sims))
    sims = tuple(SimulationSpec(f"S{i}", draw(st.floats(10, 500))) for i in range(1, n_sims + 1))
    volume = draw(st.floats(min_volume, 20 * GB))
    analyses = []
    for s in sims:
        for j in range(draw(st.integers(1, max_per_sim))):
            v = volume if uniform_volume else draw(st.floats(min_volume, 20 * GB))
            analyses.append(AnalysisSpec(f"{s.id}.A{j}", draw(st.floats(5, 750)), v, s.id))
    ens = Ensemble(sims, tuple(analyses), draw(st.integers(1, 5)))
    remote = [a.id for a in analyses if draw(st.booleans())]
    n_groups = draw(st.integers(1, 3)) if remote else 0
    groups = [[] for _ in range(n_groups)]
    for i, a in enumerate(remote):
        groups[i % n_groups].append(a)
    part = Partition(frozenset(a.id for a in analyses) - set(remote),
                     tuple(tuple(g) for g in groups if g))
    N = draw(st.integers(n_sims + n_groups, 64))
    C = draw(st.sampled_from([8, 16, 32, 64]))
    plat = Platform(N, C, 256 * GB, draw(st.floats(1 * GB, 50 * GB)))
    return ens, part, plat
