import os
import subprocess
import sys

import numpy as np
import pytest

from rieszforge import _kernels
from rieszforge.energy import energy_truncated, gradient_truncated
from rieszforge.geometry import FlatTorus, Sphere2
from rieszforge.neighbors import build_grid
from rieszforge.weights import LogRadius, PolyCutoff, RieszParams, ZPolyDensity


def test_compiled_extension_is_present_in_this_build():
    assert _kernels.available_backends() == ["compiled", "python"]
    assert _kernels.BACKEND == "compiled"


def test_get_backend_lookup():
    assert _kernels.get_backend(None) is not None
    assert _kernels.get_backend("python") is _kernels.numpy_backend
    assert _kernels.get_backend("compiled").__name__.endswith("_core")
    with pytest.raises(ValueError):
        _kernels.get_backend("fortran")


def _sorted_pairs(ii, jj, dist):
    order = np.lexsort((jj, ii))
    swap = ii > jj
    a = np.where(swap, jj, ii)
    b = np.where(swap, ii, jj)
    order = np.lexsort((b, a))
    return a[order], b[order], dist[order]


@pytest.mark.parametrize("periodic", [False, True], ids=["open", "periodic"])
def test_pair_enumeration_agrees_between_backends(periodic):
    if periodic:
        man = FlatTorus((1.0, 1.0))
        box = np.asarray(man.periodic_box)
        delta = 0.2
    else:
        man = Sphere2(1.0)
        box = None
        delta = 0.35
    cfg = man.sample_uniform(300, seed=5)
    grid = build_grid(cfg, delta, box=box)
    pi, pj, pd, pc = grid.pairs(backend="python")
    ci, cj, cd, cc = grid.pairs(backend="compiled")
    pa, pb, pdist = _sorted_pairs(pi, pj, pd)
    ca, cb, cdist = _sorted_pairs(ci, cj, cd)
    assert np.array_equal(pa, ca)
    assert np.array_equal(pb, cb)
    assert np.allclose(pdist, cdist, rtol=1e-15, atol=0.0)
    assert pc == cc


def test_energies_and_gradients_agree_between_backends():
    man = Sphere2(1.0)
    dens = ZPolyDensity(man, 1.0, 1.0)
    params = RieszParams(
        s=3.5,
        dim=2,
        radius=LogRadius(1.0, 2),
        cutoff=PolyCutoff(3),
        density=dens,
        weight_mode="density",
    )
    for seed in (0, 1, 2):
        cfg = man.sample_uniform(250, seed=seed)
        e_py = energy_truncated(cfg, params, backend="python")
        e_c = energy_truncated(cfg, params, backend="compiled")
        assert e_c.total == pytest.approx(e_py.total, rel=1e-13)
        assert e_c.pair_terms_evaluated == e_py.pair_terms_evaluated
        g_py = gradient_truncated(cfg, params, backend="python")
        g_c = gradient_truncated(cfg, params, backend="compiled")
        scale = np.max(np.abs(g_py))
        assert np.max(np.abs(g_c - g_py)) < 1e-12 * scale


def test_thread_cap_parses_the_environment(monkeypatch):
    monkeypatch.delenv("RIESZ_THREADS", raising=False)
    assert _kernels.thread_cap() == (os.cpu_count() or 1)
    monkeypatch.setenv("RIESZ_THREADS", "0")
    assert _kernels.thread_cap() == (os.cpu_count() or 1)
    monkeypatch.setenv("RIESZ_THREADS", "3")
    assert _kernels.thread_cap() == 3
    monkeypatch.setenv("RIESZ_THREADS", "  2 ")
    assert _kernels.thread_cap() == 2
    monkeypatch.setenv("RIESZ_THREADS", "many")
    with pytest.raises(ValueError):
        _kernels.thread_cap()
    monkeypatch.setenv("RIESZ_THREADS", "-1")
    with pytest.raises(ValueError):
        _kernels.thread_cap()


def _import_with_backend(value):
    env = dict(os.environ)
    env["RIESZ_BACKEND"] = value
    return subprocess.run(
        [sys.executable, "-c", "import rieszforge; print(rieszforge.BACKEND)"],
        capture_output=True,
        text=True,
        env=env,
    )


def test_backend_forcing_through_the_environment():
    forced_py = _import_with_backend("python")
    assert forced_py.returncode == 0
    assert forced_py.stdout.strip() == "python"

    forced_c = _import_with_backend("compiled")
    assert forced_c.returncode == 0
    assert forced_c.stdout.strip() == "compiled"

    bogus = _import_with_backend("gpu")
    assert bogus.returncode != 0
    assert "RIESZ_BACKEND" in bogus.stderr
