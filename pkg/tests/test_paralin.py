"""Paralinearized complex system: decomposition exactness and structure."""

import numpy as np

from beamwave.bridge import BridgeSystem, QuadraticNonlinearity
from beamwave.grid import TorusGrid, transform
from beamwave.paralin import ParalinearizedSystem
from beamwave.state import complexify, is_conjugate_pair, stacked_norm


def coupled_system(n=32, amp=1e-2):
    g = TorusGrid(n)
    F1 = QuadraticNonlinearity(g, [(1.0, 4, 5)])
    F2 = QuadraticNonlinearity(g, [(1.0, 2, 5), (0.5, 5, 5)])
    sys = BridgeSystem(g, 1.0, 1.0, F1=F1, F2=F2)
    fields = (
        amp * np.sin(g.x),
        0.5 * amp * np.cos(g.x),
        amp * np.sin(2 * g.x),
        0.5 * amp * np.cos(2 * g.x),
    )
    V = complexify(*(transform(g, v) for v in fields)).stacked()
    return g, sys, ParalinearizedSystem(sys, g), V


def test_full_rhs_matches_real_system():
    # complexified right-hand side must be the exact transport of the real one
    g, sys, para, V = coupled_system()
    from beamwave.state import StateVector, realify

    y, yt, th, tht = realify(StateVector.from_stacked(g, V))
    ytt, thtt = sys.real_rhs(y.coeffs, yt.coeffs, th.coeffs, tht.coeffs, 0.0)
    rhs = para.full_rhs(V, 0.0)
    br = g.brackets
    rt2 = np.sqrt(2.0)
    dz_expect = (br * yt.coeffs + 1j * ytt / br) / rt2
    assert np.max(np.abs(rhs[: g.n] - dz_expect)) < 1e-12


def test_decomposition_reproduces_full_rhs():
    # frakA V + frakB V + R V + remainder(V) + G == full_rhs to machine precision
    g, sys, para, V = coupled_system()
    lin = (
        para.frak_A(V).matrix + para.frak_B(V).matrix + para.R_operator().matrix
    ) @ V
    total = lin + para.remainder(V, 0.0) + para.forcing_G(0.0)
    assert np.max(np.abs(total - para.full_rhs(V, 0.0))) < 1e-12


def test_remainder_is_quadratically_small():
    g, sys, para, V = coupled_system(amp=1e-2)
    r1 = stacked_norm(g, para.remainder(V, 0.0), 1.0)
    _, _, para2, V2 = coupled_system(amp=1e-3)
    r2 = stacked_norm(g, para2.remainder(V2, 0.0), 1.0)
    # quadratic in the data: one decade in amplitude -> two decades in the rest
    assert r2 < 2e-2 * r1


def test_trivial_background_generator_is_diagonal_phases():
    g = TorusGrid(16)
    sys = BridgeSystem(g, 1.0, 1.0)
    para = ParalinearizedSystem(sys, g)
    A = para.frak_A(None).matrix
    n = g.n
    j2 = g.modes.astype(float) ** 2
    expect = np.concatenate([-1j * j2, 1j * j2, -1j * np.abs(g.modes), 1j * np.abs(g.modes)])
    assert np.max(np.abs(A - np.diag(expect))) < 1e-12
    assert np.max(np.abs(para.frak_B(None).matrix)) == 0.0


def test_R_operator_trivial_system_order_zero():
    # for b = c = 1 the complex linear part differs from frakA(0) only by the
    # bounded bracket corrections (order 0): <j>^2 vs j^2 and <j> vs |j|
    g = TorusGrid(16)
    sys = BridgeSystem(g, 1.0, 1.0)
    para = ParalinearizedSystem(sys, g)
    R = para.R_operator().matrix
    from beamwave.quantize import SpectralOperator, exact_operator_norm

    op = SpectralOperator(g, R, 0.0, block=4)
    # the correction <j>^2 - j^2 = 1 is largest at j = 0, giving norm ~ 1
    assert exact_operator_norm(op, 0.0, 0.0) < 1.5
    # and it is genuinely order 0: the H^2 -> H^0 norm is no larger
    assert exact_operator_norm(op, 2.0, 0.0) < 1.5


def test_rhs_preserves_conjugate_pairing():
    g, sys, para, V = coupled_system()
    assert is_conjugate_pair(g, V)
    assert is_conjugate_pair(g, para.full_rhs(V, 0.0))


def test_forcing_G_conjugate_structure():
    g = TorusGrid(16)
    sys = BridgeSystem(g, 1.0, 1.0, gamma=1.0, delta=0.5, f_b=np.cos)
    para = ParalinearizedSystem(sys, g)
    G = para.forcing_G(0.7)
    n = g.n
    assert G[n] == np.conj(G[0])
    assert G[3 * n] == np.conj(G[2 * n])
    assert np.count_nonzero(G) == 4


def test_g_functions_from_nonlinearity():
    g, sys, para, V = coupled_system(amp=1e-2)
    a, d, g_1w, g_12b, g_12w = para.g_functions(V)
    # F2 contains (1/2) theta_xx^2 -> g_1w = (1/2) dF2/d(theta_xx) = theta_xx/2...
    # evaluated at the jet; nonzero for nonzero data, zero at V = None
    assert g_1w.norm(0.0) > 0.0
    a0, d0, z1, z2, z3 = para.g_functions(None)
    assert z1.norm(0.0) == 0.0 and z2.norm(0.0) == 0.0 and z3.norm(0.0) == 0.0
