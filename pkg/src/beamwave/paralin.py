"""Paralinearized complex form of the bridge system.

The complexified unknown V = (z, zbar, w, wbar) evolves by

    d_t V = frakA(V) V + frakB(V) V + R V + remainder(V) + G(t)

with

    frakA = diag(-iE Op^BW(A_b), -iE Op^BW(A_w)),
    frakB = antidiag(-iE Op^BW(B_b), -iE Op^BW(B_w)),
    A_b = (1 + U a) xi^2 + 2i U a_x xi,          a = (b - 1)/2,
    A_w = (1 + U a_w) |xi|,                      a_w = d + g_1w,  d = (c - 1)/2,
    B_b = U g_12b <xi>^{-3/2} xi^2,  B_w = U g_12w <xi>^{-3/2} xi^2,

where the g-functions are halved partials of the nonlinearities at the
realified jet of V.  R is defined constructively as the exact complexified
linear part minus frakA(0) (block diagonal, order 0), and the remainder is
defined by subtraction so the decomposition reproduces the full right-hand
side to machine precision.
"""

import numpy as np

from .bridge import _fft_raw
from .grid import SpectralFunction, transform
from .quantize import SpectralOperator, bony_weyl_quantize
from .state import StateVector
from .symbols import (
    DEFAULT_EPS_PARA,
    FrequencyMultiplier,
    MatrixSymbol,
    SeparableSymbol,
)

_E2 = np.diag([1.0, -1.0])


def _u_matrix_symbol(grid, f, mult):
    """MatrixSymbol U * f(x) * g(xi) (all four entries equal)."""
    ent = np.empty((2, 2), dtype=object)
    for i in range(2):
        for j in range(2):
            ent[i, j] = SeparableSymbol(grid, [(f, mult)])
    return MatrixSymbol(grid, ent)


class ParalinearizedSystem:
    def __init__(self, source, grid, eps_para=DEFAULT_EPS_PARA):
        self.source = source
        self.grid = grid
        self.eps_para = float(eps_para)
        one = SpectralFunction.constant(grid, 1.0)
        self.a_fun = 0.5 * (source.b - one)
        self.d_fun = 0.5 * (source.c - one)
        self._R = None
        self._L_complex = None
        self._frak_cache = {}

    # -- g-functions ---------------------------------------------------

    def g_functions(self, V):
        """(a, d, g_1w, g_12b, g_12w) at the realified jet of V."""
        src = self.source
        if V is None:
            zero = SpectralFunction.zero(self.grid)
            return self.a_fun, self.d_fun, zero, zero, zero
        y_hat, _, th_hat, _ = self._real_parts(np.asarray(V))
        jets = src.jets(y_hat, th_hat)

        def g_of(F, slot):
            vals = 0.5 * F.partial_values(slot, jets)
            u = SpectralFunction(self.grid, src._dealias(_fft_raw(self.grid, vals)), is_real=True)
            return u

        g_1w = g_of(src.F2, 5)
        g_12b = g_of(src.F1, 5)
        g_12w = g_of(src.F2, 2)
        return self.a_fun, self.d_fun, g_1w, g_12b, g_12w

    # -- symbols -------------------------------------------------------

    def assemble_symbols(self, V):
        grid = self.grid
        a, d, g_1w, g_12b, g_12w = self.g_functions(V)
        xi2 = FrequencyMultiplier.xi_power(2)
        xi1 = FrequencyMultiplier.xi_power(1)
        absxi = FrequencyMultiplier.abs_xi()
        off = FrequencyMultiplier.bracket(-1.5) * xi2  # <xi>^{-3/2} xi^2, order 1/2

        A_b = (
            MatrixSymbol.identity(grid) * xi2
            + _u_matrix_symbol(grid, a, xi2)
            + _u_matrix_symbol(grid, 2j * a.deriv(), xi1)
        )
        a_w = d + g_1w
        A_w = MatrixSymbol.identity(grid) * absxi + _u_matrix_symbol(grid, a_w, absxi)
        B_b = _u_matrix_symbol(grid, g_12b, off)
        B_w = _u_matrix_symbol(grid, g_12w, off)
        return {"A_b": A_b, "A_w": A_w, "B_b": B_b, "B_w": B_w, "a_w": a_w}

    # -- block operators ----------------------------------------------

    def _minus_iE_op(self, sym):
        op = bony_weyl_quantize(sym, self.eps_para)
        E = np.kron(_E2, np.eye(self.grid.n))
        return -1j * (E @ op.matrix), op.order

    def frak_A(self, V):
        """diag(-iE Op^BW(A_b), -iE Op^BW(A_w)) as a 4-block operator."""
        key = ("A", None if V is None else hash(np.asarray(V).tobytes()))
        hit = self._frak_cache.get(key)
        if hit is not None:
            return hit
        syms = self.assemble_symbols(V)
        n = self.grid.n
        M = np.zeros((4 * n, 4 * n), dtype=complex)
        beam, _ = self._minus_iE_op(syms["A_b"])
        wave, _ = self._minus_iE_op(syms["A_w"])
        M[: 2 * n, : 2 * n] = beam
        M[2 * n :, 2 * n :] = wave
        op = SpectralOperator(self.grid, M, order=2.0, block=4)
        self._trim_cache()
        self._frak_cache[key] = op
        return op

    def frak_B(self, V):
        """antidiagonal coupling blocks -iE Op^BW(B_b), -iE Op^BW(B_w)."""
        key = ("B", None if V is None else hash(np.asarray(V).tobytes()))
        hit = self._frak_cache.get(key)
        if hit is not None:
            return hit
        syms = self.assemble_symbols(V)
        n = self.grid.n
        M = np.zeros((4 * n, 4 * n), dtype=complex)
        top, _ = self._minus_iE_op(syms["B_b"])
        bot, _ = self._minus_iE_op(syms["B_w"])
        M[: 2 * n, 2 * n :] = top
        M[2 * n :, : 2 * n] = bot
        op = SpectralOperator(self.grid, M, order=0.5, block=4)
        self._trim_cache()
        self._frak_cache[key] = op
        return op

    def _trim_cache(self):
        if len(self._frak_cache) > 64:
            keep = {k: v for k, v in self._frak_cache.items() if k[1] is None}
            self._frak_cache = keep

    # -- exact complexified linear part --------------------------------

    def L_complex_matrix(self):
        """Exact matrix of the complexified linear system on stacked V."""
        if self._L_complex is not None:
            return self._L_complex
        g = self.grid
        n = g.n
        br = g.brackets
        rt2 = np.sqrt(2.0)
        Z = np.zeros((n, 4 * n), dtype=complex)

        def place(col, diag):
            P = Z.copy()
            P[:, col * n : (col + 1) * n] = np.diag(diag)
            return P

        # stacked -> generalized real fields
        P_y = place(0, 1.0 / (rt2 * br)) + place(1, 1.0 / (rt2 * br))
        P_ydot = place(0, br / (1j * rt2)) - place(1, br / (1j * rt2))
        P_th = place(2, 1.0 / (rt2 * np.sqrt(br))) + place(3, 1.0 / (rt2 * np.sqrt(br)))
        P_thdot = place(2, np.sqrt(br) / (1j * rt2)) - place(3, np.sqrt(br) / (1j * rt2))

        src = self.source
        ytt = src.calB_matrix() @ P_y + src.alpha * P_ydot
        thtt = src.calW_matrix() @ P_th + src.beta * P_thdot

        D = np.diag(br)
        Dinv = np.diag(1.0 / br)
        Dh = np.diag(np.sqrt(br))
        Dhinv = np.diag(1.0 / np.sqrt(br))

        rows = np.zeros((4 * n, 4 * n), dtype=complex)
        rows[:n] = (D @ P_ydot + 1j * Dinv @ ytt) / rt2
        rows[n : 2 * n] = (D @ P_ydot - 1j * Dinv @ ytt) / rt2
        rows[2 * n : 3 * n] = (Dh @ P_thdot + 1j * Dhinv @ thtt) / rt2
        rows[3 * n :] = (Dh @ P_thdot - 1j * Dhinv @ thtt) / rt2
        self._L_complex = rows
        return rows

    def R_operator(self):
        """R := L_complex - frakA(0); block diagonal, order <= 0."""
        if self._R is None:
            M = self.L_complex_matrix() - self.frak_A(None).matrix
            self._R = SpectralOperator(self.grid, M, order=0.0, block=4)
        return self._R

    # -- full right-hand side ------------------------------------------

    def _real_parts(self, vec):
        """Generalized (y, y_t, theta, theta_t) coefficient arrays from a
        stacked vector (analytic continuation: slots need not be conjugate)."""
        g = self.grid
        n = g.n
        br = g.brackets
        rt2 = np.sqrt(2.0)
        z, zb = vec[:n], vec[n : 2 * n]
        w, wb = vec[2 * n : 3 * n], vec[3 * n :]
        y = (z + zb) / (rt2 * br)
        y_t = br * (z - zb) / (1j * rt2)
        th = (w + wb) / (rt2 * np.sqrt(br))
        th_t = np.sqrt(br) * (w - wb) / (1j * rt2)
        return y, y_t, th, th_t

    def full_rhs(self, vec, t=0.0):
        """Exact complexified right-hand side on a stacked vector."""
        vec = np.asarray(vec, dtype=complex)
        g = self.grid
        br = g.brackets
        rt2 = np.sqrt(2.0)
        y, y_t, th, th_t = self._real_parts(vec)
        ytt, thtt = self.source.real_rhs(y, y_t, th, th_t, t)
        dz = (br * y_t + 1j * ytt / br) / rt2
        dzb = (br * y_t - 1j * ytt / br) / rt2
        dw = (np.sqrt(br) * th_t + 1j * thtt / np.sqrt(br)) / rt2
        dwb = (np.sqrt(br) * th_t - 1j * thtt / np.sqrt(br)) / rt2
        return np.concatenate([dz, dzb, dw, dwb])

    def forcing_G(self, t):
        """Stacked forcing G(t): zero-mode entries (i gamma/sqrt2) f_b and the
        conjugate pair, likewise for the wave with delta f_w."""
        g = self.grid
        n = g.n
        out = np.zeros(4 * n, dtype=complex)
        src = self.source
        if src.gamma != 0.0:
            amp = 1j * src.gamma * src.f_b(t) / np.sqrt(2.0)
            out[0] = amp
            out[n] = -amp
        if src.delta != 0.0:
            amp = 1j * src.delta * src.f_w(t) / np.sqrt(2.0)
            out[2 * n] = amp
            out[3 * n] = -amp
        return out

    def remainder(self, vec, t=0.0):
        """remainder(V) := full_rhs - frakA(V)V - frakB(V)V - RV - G(t)."""
        vec = np.asarray(vec, dtype=complex)
        lin = (self.frak_A(vec).matrix + self.frak_B(vec).matrix + self.R_operator().matrix) @ vec
        return self.full_rhs(vec, t) - lin - self.forcing_G(t)

    def kato_forcing(self, vec, t=0.0):
        """R V + remainder(V) + G(t), evaluated as full_rhs - (frakA+frakB)V.

        This is the inhomogeneity of the Kato step (P)_n frozen at V = V_{n-1};
        the algebraic shortcut avoids assembling R explicitly."""
        vec = np.asarray(vec, dtype=complex)
        lin = (self.frak_A(vec).matrix + self.frak_B(vec).matrix) @ vec
        return self.full_rhs(vec, t) - lin
