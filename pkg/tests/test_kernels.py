import subprocess
import sys

import numpy as np
import pytest

import dickesim
from dickesim import SimParams, assemble_rhs, build_layout
from dickesim._apply import csr_matvec, using_compiled_kernels

from conftest import random_hermitian_state


@pytest.fixture
def superop():
    lay = build_layout(4)
    return assemble_rhs(SimParams(N=4, g=1.1, kappa=0.4, gamma=0.7), lay)


def test_kernel_matches_scipy(superop, rng):
    x = (rng.standard_normal(superop.dim)
         + 1j * rng.standard_normal(superop.dim))
    expected = superop.matrix.dot(x)
    out = csr_matvec(superop.matrix, x)
    assert np.allclose(out, expected, rtol=0, atol=1e-13)


@pytest.mark.skipif(not using_compiled_kernels(),
                    reason="compiled kernels unavailable")
def test_thread_count_does_not_change_bits(superop, rng):
    x = (rng.standard_normal(superop.dim)
         + 1j * rng.standard_normal(superop.dim))
    single = csr_matvec(superop.matrix, x, num_threads=1)
    multi = csr_matvec(superop.matrix, x, num_threads=4)
    assert np.array_equal(single, multi)


def test_pure_python_fallback_env(tmp_path):
    # DICKESIM_PURE forces the scipy path; results agree with the kernel
    code = (
        "import numpy as np\n"
        "from dickesim import SimParams, assemble_rhs, build_layout\n"
        "from dickesim._apply import using_compiled_kernels\n"
        "lay = build_layout(3)\n"
        "op = assemble_rhs(SimParams(N=3, g=1.0, kappa=0.5, gamma=0.2), lay)\n"
        "rng = np.random.default_rng(3)\n"
        "x = rng.standard_normal(op.dim) + 1j * rng.standard_normal(op.dim)\n"
        "np.save(%r, op.apply(x))\n"
        "print(using_compiled_kernels())\n"
    )
    import os
    env = dict(os.environ)
    out_pure = tmp_path / "pure.npy"
    env["DICKESIM_PURE"] = "1"
    res = subprocess.run([sys.executable, "-c", code % str(out_pure)],
                         env=env, capture_output=True, text=True, check=True)
    assert res.stdout.strip() == "False"
    env.pop("DICKESIM_PURE")
    out_fast = tmp_path / "fast.npy"
    subprocess.run([sys.executable, "-c", code % str(out_fast)],
                   env=env, capture_output=True, text=True, check=True)
    a, b = np.load(out_pure), np.load(out_fast)
    assert np.allclose(a, b, rtol=0, atol=1e-13)


def test_superop_rejects_noncontiguous_gracefully(superop):
    x = np.zeros((superop.dim, 2), dtype=complex)[:, 0]  # non-contiguous view
    out = superop.apply(x)
    assert np.all(out == 0)
