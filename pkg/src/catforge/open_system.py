"""Lindblad master-equation evolution in the restricted photon space.

With a single photon initially loaded and vacuum optical baths, the cavity
state never leaves the span of |1>_L|0>_R, |0>_L|1>_R and |0>_L|0>_R.  The
density matrix therefore lives on three photon sectors tensored with the
truncated phonon ladder, and the master equation

    drho/dt = i[rho, H(t)] + gamma_c D[a_L] + gamma_c D[a_R]
              + gamma_m (n_th+1) D[b] + gamma_m n_th D[b^dag]

is applied through sector-block operators (photon loss maps the one-photon
sectors into the vacuum sector).  Propagation is fixed-step RK4 on the
phonon-interaction-picture matrix, with the exact e^{-i omega_m (p-q) t}
phases restored at record times; omega_c multiplies only one-photon/vacuum
coherences, which start at zero and are never generated, so it is gauged to
zero inside the solver (asserted at record times).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .closed import SolverAbort, SolverConfig, _segment_steps
from .model import DerivedModulation, SystemParams, derive, target_states
from .trajectory import TrajectoryRecord

__all__ = [
    "PhotonSector",
    "SystemDensityMatrix",
    "OpenRun",
    "initial_density",
    "rhs_lindblad",
    "evolve_open",
    "reduce_mechanical",
    "fidelity_open",
    "mean_phonon_number",
    "write_snapshot",
    "read_snapshot",
]

OPEN_COLUMNS = ("t", "P_L", "P_R", "P_V", "nb", "F_L", "F_R", "trace_err", "min_eig")

TRACE_ABORT = 1e-6
EIG_ABORT = -1e-6
P_FLOOR = 1e-12


class PhotonSector(Enum):
    """Photon configurations retained in the single-photon problem."""

    L = 0  # |1>_L |0>_R
    R = 1  # |0>_L |1>_R
    V = 2  # |0>_L |0>_R


@dataclass
class SystemDensityMatrix:
    """Density matrix over {L,R,V} x phonon ladder, indexed sector-major."""

    rho: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=complex)
        if self.rho.ndim != 2 or self.rho.shape[0] != self.rho.shape[1]:
            raise ValueError("rho must be square")
        if self.rho.shape[0] % 3:
            raise ValueError("dimension must be 3*(n_max+1)")

    @property
    def n_max(self) -> int:
        return self.rho.shape[0] // 3 - 1

    def block(self, row: PhotonSector, col: PhotonSector) -> np.ndarray:
        d = self.n_max + 1
        return self.rho[row.value * d : (row.value + 1) * d, col.value * d : (col.value + 1) * d]

    def trace_error(self) -> float:
        return float(abs(np.trace(self.rho).real - 1.0) + abs(np.trace(self.rho).imag))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.rho - self.rho.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T))[0])

    def cross_sector_coherence(self) -> float:
        """Largest one-photon/vacuum coherence (exactly conserved at zero)."""
        lv = np.max(np.abs(self.block(PhotonSector.L, PhotonSector.V)))
        rv = np.max(np.abs(self.block(PhotonSector.R, PhotonSector.V)))
        return float(max(lv, rv))


def initial_density(kind: str, n_max: int) -> SystemDensityMatrix:
    """Photon state 'left'/'right'/'bell'/'vacuum' with the phonon ground state."""
    d = n_max + 1
    amp = np.zeros(3 * d, dtype=complex)
    if kind == "left":
        amp[0] = 1.0
    elif kind == "right":
        amp[d] = 1.0
    elif kind == "bell":
        amp[0] = amp[d] = 1.0 / math.sqrt(2.0)
    elif kind == "vacuum":
        amp[2 * d] = 1.0
    else:
        raise ValueError(f"unknown initial state {kind!r}")
    return SystemDensityMatrix(np.outer(amp, amp.conj()), 0.0)


class _Generators:
    """Sector-block Lindblad generator for one n_max.

    The Hamiltonian commutator and the dissipators act through ladder shifts
    and sector swaps on a (3, d, 3, d) view of rho, which is several times
    faster than dense matrix products at these dimensions.  Equivalence with
    the element-wise master equation is pinned by tests.
    """

    def __init__(self, params: SystemParams, n_max: int):
        d = n_max + 1
        self.d = d
        self.params = params
        self.s = np.sqrt(np.arange(1.0, d))  # b|p> = s[p-1] |p-1>
        self.ss = self.s[:, None] * self.s[None, :]

        # elementwise damping factors: photon anticommutators + phonon diagonal
        chi = np.repeat([1.0, 1.0, 0.0], d)  # photon number per sector
        n_ph = np.tile(np.arange(d, dtype=float), 3)
        g_c, g_m, nth = params.gamma_c, params.gamma_m, params.n_th
        self.damp = -0.5 * (
            g_c * (chi[:, None] + chi[None, :])
            + g_m * ((2 * nth + 1) * (n_ph[:, None] + n_ph[None, :]) + 2 * nth)
        )
        # lab-frame free phases: i(E_j - E_i) with E = omega_c*chi + omega_m*n
        energy = params.omega_c * chi + params.omega_m * n_ph
        self.free_phase = 1j * (energy[None, :] - energy[:, None])
        self.n_ph = n_ph

    def apply(self, t: float, rho: np.ndarray, interaction: bool) -> np.ndarray:
        p = self.params
        d = self.d
        s = self.s
        lv, rv = PhotonSector.L.value, PhotonSector.R.value
        vv = PhotonSector.V.value
        r4 = rho.reshape(3, d, 3, d)

        # H = alpha (|L><R| + |R><L|) (x) I  +  z Pi_R (x) b  +  conj(z) Pi_R (x) b^dag
        alpha = -p.xi * p.omega_0 * math.cos(p.omega_0 * t)
        z = -p.g0 * (np.exp(-1j * p.omega_m * t) if interaction else 1.0)
        zc = np.conj(z)

        comm = np.zeros_like(rho)
        c4 = comm.reshape(3, d, 3, d)
        # hopping: sector swap on rows (H rho) and columns (rho H)
        c4[lv] += alpha * r4[rv]
        c4[rv] += alpha * r4[lv]
        c4[:, :, lv] -= alpha * r4[:, :, rv]
        c4[:, :, rv] -= alpha * r4[:, :, lv]
        # radiation pressure: phonon shifts on the R sector
        c4[rv, :-1] += (z * s)[:, None, None] * r4[rv, 1:]
        c4[rv, 1:] += (zc * s)[:, None, None] * r4[rv, :-1]
        c4[:, :, rv, 1:] -= (z * s) * r4[:, :, rv, :-1]
        c4[:, :, rv, :-1] -= (zc * s) * r4[:, :, rv, 1:]

        out = self.damp * rho
        out += -1j * comm
        if not interaction:
            out += self.free_phase * rho
        out4 = out.reshape(3, d, 3, d)
        if p.gamma_c:
            out4[vv, :, vv] += p.gamma_c * (r4[lv, :, lv] + r4[rv, :, rv])
        if p.gamma_m:
            g_down = p.gamma_m * (p.n_th + 1.0)
            out4[:, :-1, :, :-1] += (g_down * self.ss)[None, :, None, :] * r4[:, 1:, :, 1:]
            if p.n_th:
                g_up = p.gamma_m * p.n_th
                out4[:, 1:, :, 1:] += (g_up * self.ss)[None, :, None, :] * r4[:, :-1, :, :-1]
        return out


def rhs_lindblad(rho: SystemDensityMatrix, params: SystemParams) -> np.ndarray:
    """Lab-frame time derivative of the density matrix at rho.t."""
    gen = _Generators(params, rho.n_max)
    return gen.apply(rho.t, rho.rho, interaction=False)


@dataclass
class OpenRun:
    record: TrajectoryRecord
    snapshots: list[SystemDensityMatrix]
    final: SystemDensityMatrix
    marked: SystemDensityMatrix | None
    trace_err_max: float
    min_eig_min: float
    herm_err_max: float
    cross_coherence_max: float


def mean_phonon_number(rho: SystemDensityMatrix) -> float:
    d = rho.n_max + 1
    diag = np.real(np.diagonal(rho.rho))
    return float(np.sum(np.tile(np.arange(d), 3) * diag))


def reduce_mechanical(rho: SystemDensityMatrix, sector: PhotonSector) -> tuple[np.ndarray, float]:
    """Normalized reduced mechanical state and detection probability for a sector."""
    blk = rho.block(sector, sector)
    p = float(np.trace(blk).real)
    if p < P_FLOOR:
        raise ValueError(f"sector {sector.name} probability {p:.3e} below {P_FLOOR:g}")
    return blk / p, p


def fidelity_open(
    rho: SystemDensityMatrix, params: SystemParams, d: DerivedModulation
) -> tuple[float, float]:
    """Fidelities <phi_s|rho_M^(s)|phi_s> of the reduced states against the targets."""
    phi_l, phi_r = target_states(params, d, rho.t)
    out = []
    for sector, phi in ((PhotonSector.L, phi_l), (PhotonSector.R, phi_r)):
        rho_m, _ = reduce_mechanical(rho, sector)
        v = phi.fock_vector(rho.n_max)
        out.append(float(np.real(np.vdot(v, rho_m @ v))))
    return out[0], out[1]


def evolve_open(
    initial: SystemDensityMatrix,
    params: SystemParams,
    cfg: SolverConfig,
    keep_snapshots: bool = False,
) -> OpenRun:
    """Propagate the master equation, recording probabilities and fidelities.

    Aborts when the trace drifts by more than 1e-6 or an eigenvalue dips below
    -1e-6 (both checked at record times; positivity is an O(dim^3) solve).
    """
    cfg.validate(params)
    if initial.trace_error() > 1e-8:
        raise ValueError("initial density matrix must have unit trace")
    if initial.hermiticity_error() > 1e-10:
        raise ValueError("initial density matrix must be Hermitian")

    d = derive(params)
    gen = _Generators(params, initial.n_max)
    n_ph = gen.n_ph
    record = TrajectoryRecord(OPEN_COLUMNS)
    snapshots: list[SystemDensityMatrix] = []
    marked = None
    trace_max = 0.0
    eig_min = math.inf
    herm_max = 0.0
    cross_max = 0.0

    def lab_state(t: float, rho_t: np.ndarray) -> SystemDensityMatrix:
        ph = np.exp(-1j * params.omega_m * t * n_ph)
        return SystemDensityMatrix(ph[:, None] * rho_t * ph.conj()[None, :], t)

    def emit(t: float, rho_t: np.ndarray):
        nonlocal marked, trace_max, eig_min, herm_max, cross_max
        st = lab_state(t, rho_t)
        tr_err = st.trace_error()
        mineig = st.min_eigenvalue()
        trace_max = max(trace_max, tr_err)
        eig_min = min(eig_min, mineig)
        herm_max = max(herm_max, st.hermiticity_error())
        cross_max = max(cross_max, st.cross_sector_coherence())
        if tr_err > TRACE_ABORT:
            raise SolverAbort(
                f"trace drift {tr_err:.3e} at t={t:g} exceeds {TRACE_ABORT:g}; reduce dt"
            )
        if mineig < EIG_ABORT:
            raise SolverAbort(
                f"negative eigenvalue {mineig:.3e} at t={t:g} below {EIG_ABORT:g}; "
                "reduce dt or increase n_max"
            )
        diag = np.real(np.diagonal(st.rho))
        dsz = st.n_max + 1
        p_l = float(np.sum(diag[:dsz]))
        p_r = float(np.sum(diag[dsz : 2 * dsz]))
        p_v = float(np.sum(diag[2 * dsz :]))
        row = dict(
            t=t, P_L=p_l, P_R=p_r, P_V=p_v, nb=mean_phonon_number(st),
            trace_err=tr_err, min_eig=mineig,
        )
        phi_l, phi_r = target_states(params, d, t)
        for name, p, phi in (("F_L", p_l, phi_l), ("F_R", p_r, phi_r)):
            if p > P_FLOOR:
                v = phi.fock_vector(st.n_max)
                blk = st.block(PhotonSector[name[-1]], PhotonSector[name[-1]])
                row[name] = float(np.real(np.vdot(v, blk @ v)) / p)
            else:
                row[name] = math.nan
        record.append(**row)
        if keep_snapshots:
            snapshots.append(st)
        if cfg.t_mark is not None and abs(t - cfg.t_mark) < 1e-12:
            marked = st
        return st

    rho = initial.rho.copy()
    emit(0.0, rho)

    bounds = [0.0]
    if cfg.t_mark is not None and cfg.t_mark < cfg.t_end:
        bounds.append(cfg.t_mark)
    bounds.append(cfg.t_end)

    for t0, t1 in zip(bounds[:-1], bounds[1:]):
        n_steps, dt = _segment_steps(cfg.dt, t0, t1)
        for i in range(n_steps):
            t = t0 + i * dt
            k1 = gen.apply(t, rho, True)
            k2 = gen.apply(t + dt / 2, rho + dt / 2 * k1, True)
            k3 = gen.apply(t + dt / 2, rho + dt / 2 * k2, True)
            k4 = gen.apply(t + dt, rho + dt * k3, True)
            rho = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t = t0 + (i + 1) * dt if i + 1 < n_steps else t1
            if (i + 1) % cfg.record_stride == 0 or i + 1 == n_steps:
                emit(t, rho)

    final = lab_state(cfg.t_end, rho)
    if cfg.t_mark is not None and cfg.t_mark == cfg.t_end:
        marked = final
    return OpenRun(
        record=record,
        snapshots=snapshots,
        final=final,
        marked=marked,
        trace_err_max=trace_max,
        min_eig_min=eig_min,
        herm_err_max=herm_max,
        cross_coherence_max=cross_max,
    )


def write_snapshot(path, sdm: SystemDensityMatrix):
    """Dump a density matrix as JSON: dim, time, row-major interleaved re/im."""
    flat = sdm.rho.ravel()
    data = np.empty(2 * flat.size)
    data[0::2] = flat.real
    data[1::2] = flat.imag
    doc = {
        "dim": sdm.rho.shape[0],
        "t": sdm.t,
        "layout": "row-major interleaved re/im",
        "data": data.tolist(),
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(doc, fh)


def read_snapshot(path) -> SystemDensityMatrix:
    with open(path, encoding="ascii") as fh:
        doc = json.load(fh)
    dim = int(doc["dim"])
    data = np.asarray(doc["data"], dtype=float)
    rho = (data[0::2] + 1j * data[1::2]).reshape(dim, dim)
    return SystemDensityMatrix(rho, float(doc["t"]))
