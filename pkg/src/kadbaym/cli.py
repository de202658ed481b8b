"""Demo drivers: quadrature scaling, equilibrium/nonequilibrium solver
convergence, and the interacting Hubbard-chain propagation.

Every driver is deterministic given its input file.  Input files carry
lines of the form ``__Name=value``; later duplicates override earlier
ones and malformed lines are skipped with a warning.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
import warnings
from math import pi

import numpy as np

from . import BOSON, FERMION
from .analysis import fit_loglog
from .containerio import export_csv, write_groups
from .contour import (ContourScalarFn, HermMatrix, distance_norm2,
                      distance_norm2_component, extrapolate_timestep)
from .convolution import correlation_energy, conv_matsubara, conv_timestep
from .diagrams import chi_from_P, ham_mf, phi_pp, polarization, sigma_2b, sigma_gw, sigma_tmatrix
from .dyson import dyson_mat, dyson_start, dyson_timestep
from .freegf import green_from_H
from .vie2 import vie2_mat, vie2_start, vie2_timestep
from .weights import gregory_integrate

__all__ = ["parse_input", "run_gregory_test", "run_test_equilibrium",
           "run_test_nonequilibrium", "run_hubbard_chain", "main"]


def parse_input(path) -> dict:
    """Parameter map from ``__Name=value`` lines (later duplicates win)."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if not line.startswith("__") or "=" not in line:
                warnings.warn(f"{path}:{lineno}: ignoring malformed input line {line!r}")
                continue
            name, _, val = line[2:].partition("=")
            name = name.strip()
            val = val.strip()
            if not name:
                warnings.warn(f"{path}:{lineno}: ignoring malformed input line {line!r}")
                continue
            try:
                out[name] = int(val)
            except ValueError:
                try:
                    out[name] = float(val)
                except ValueError:
                    out[name] = val
    return out


def require(params: dict, key: str):
    if key not in params:
        raise KeyError(f"required input key __{key} is missing")
    return params[key]


# ------------------------------------------------------------------ gregory

def run_gregory_test(k: int, out_dir=".", n_list=None) -> dict:
    """Mean absolute quadrature error of int_0^x exp(ix') on [0, 5 pi/2]."""
    xmax = 2.5 * pi
    if n_list is None:
        n_list = sorted({int(round(10 ** x)) for x in np.linspace(1, 3.2, 18)})
    errs = []
    for N in n_list:
        h = xmax / N
        x = h * np.arange(N + 1)
        y = np.exp(1j * x)
        exact = -1j * (np.exp(1j * x) - 1)
        acc = [abs(gregory_integrate(k, h, y, n) - exact[n]) for n in range(1, N + 1)]
        errs.append(float(np.mean(acc)))
    slope, _, rms, used = fit_loglog(n_list, errs)
    os.makedirs(out_dir, exist_ok=True)
    export_csv(os.path.join(out_dir, f"gregory_k{k}.csv"), ["N", "mean_abs_err"],
               np.column_stack([n_list, errs]))
    _append_summary(out_dir, "gregory", k, {"slope": slope, "fit_rms": rms,
                                            "points_used": used})
    return {"N": np.asarray(n_list), "err": np.asarray(errs), "slope": slope}


def _append_summary(out_dir, name, k, payload: dict) -> None:
    path = os.path.join(out_dir, "summary.json")
    data = {}
    if os.path.exists(path):
        with open(path) as fh:
            data = json.load(fh)
    data[f"{name}_k{k}"] = payload
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1, sort_keys=True)


# ------------------------------------------------------ two-level problems

EPS1, EPS2, LAM = -1.0, 1.0, 0.5


def _downfold_ham():
    return np.array([[EPS1, 1j * LAM], [-1j * LAM, EPS2]])


def run_test_equilibrium(k: int, out_dir=".", ntau_list=None, beta=20.0, mu=0.0) -> dict:
    """Matsubara Dyson equation for the embedded level: Fourier vs fixpoint
    errors against the exact 2x2 eigen-solution, swept over N_tau."""
    if ntau_list is None:
        ntau_list = sorted({int(round(10 ** x)) for x in np.linspace(1, 3, 20)})
    ham2 = _downfold_ham()
    err_f, err_x = [], []
    for ntau in ntau_list:
        G2 = green_from_H(-1, ntau, ham2, mu, beta, 0.1, FERMION)
        Gex = HermMatrix(-1, ntau, 1, FERMION)
        Gex.mat[:] = G2.mat[:, :1, :1]
        Sig = green_from_H(-1, ntau, np.array([[EPS2]]), mu, beta, 0.1, FERMION)
        Sig.mat *= LAM * LAM
        eps11 = ContourScalarFn.constant(-1, np.array([[EPS1]]))
        G = HermMatrix(-1, ntau, 1, FERMION)
        dyson_mat(G, Sig, mu, eps11, beta, k, method="fourier")
        err_f.append(distance_norm2(Gex, G, -1) / ntau)
        dyson_mat(G, Sig, mu, eps11, beta, k, method="fixpoint", tol=1e-13, maxiter=60)
        err_x.append(distance_norm2(Gex, G, -1) / ntau)
    sl_f = fit_loglog(ntau_list, err_f)
    sl_x = fit_loglog(ntau_list, err_x)
    os.makedirs(out_dir, exist_ok=True)
    export_csv(os.path.join(out_dir, f"test_eq_k{k}.csv"),
               ["Ntau", "err_fourier", "err_fixpoint"],
               np.column_stack([ntau_list, err_f, err_x]))
    _append_summary(out_dir, "test_eq", k, {
        "slope_fourier": sl_f[0], "slope_fixpoint": sl_x[0],
        "rms_fourier": sl_f[2], "rms_fixpoint": sl_x[2]})
    return {"Ntau": np.asarray(ntau_list), "err_fourier": np.asarray(err_f),
            "err_fixpoint": np.asarray(err_x),
            "slope_fourier": sl_f[0], "slope_fixpoint": sl_x[0]}


def _noneq_error(Gex, G, nt, ntau):
    err = 0.0
    for n in range(nt + 1):
        err += distance_norm2_component("les", Gex, G, n) / (nt * nt)
        err += distance_norm2_component("ret", Gex, G, n) / (nt * nt)
        err += distance_norm2_component("tv", Gex, G, n) / (nt * ntau)
    return err


def _vie_kernel_slice(n, G0, Sig, F, Fcc, beta, h, k):
    if n == -1:
        F.mat[:] = -conv_matsubara(G0, Sig, beta=beta, k=k)
        Fcc.mat[:] = -conv_matsubara(Sig, G0, beta=beta, k=k)
        return
    F.set_timestep(n, conv_timestep(n, G0, G0, Sig, Sig, beta=beta, h=h, k=k))
    F.smul(n, -1.0)
    Fcc.set_timestep(n, conv_timestep(n, Sig, Sig, G0, G0, beta=beta, h=h, k=k))
    Fcc.smul(n, -1.0)


def run_test_nonequilibrium(k: int, out_dir=".", nt_list=None, ntau=800,
                            tmax=5.0, beta=20.0, mu=0.0) -> dict:
    """Real-time propagation error of the embedded level, solved both in
    integro-differential (dyson) and integral (vie2) form."""
    if nt_list is None:
        nt_list = sorted({int(round(10 ** x)) for x in np.linspace(1, 2.7, 12)})
    nt_list = [n for n in nt_list if n > k]
    ham2 = _downfold_ham()
    err_d, err_v = [], []
    for nt in nt_list:
        h = tmax / nt
        G2 = green_from_H(nt, ntau, ham2, mu, beta, h, FERMION)
        Gex = HermMatrix(nt, ntau, 1, FERMION)
        Gex.mat[:] = G2.mat[:, :1, :1]
        Gex.ret[:] = G2.ret[:, :1, :1]
        Gex.les[:] = G2.les[:, :1, :1]
        Gex.tv[:] = G2.tv[:, :, :1, :1]
        Sig = green_from_H(nt, ntau, np.array([[EPS2]]), mu, beta, h, FERMION)
        for arr in (Sig.mat, Sig.ret, Sig.les, Sig.tv):
            arr *= LAM * LAM
        eps11 = ContourScalarFn.constant(nt, np.array([[EPS1]]))

        G = HermMatrix(nt, ntau, 1, FERMION)
        dyson_mat(G, Sig, mu, eps11, beta, k, method="fixpoint", tol=1e-13, maxiter=60)
        dyson_start(G, Sig, mu, eps11, beta, h, k)
        for n in range(k + 1, nt + 1):
            dyson_timestep(n, G, Sig, mu, eps11, beta, h, k)
        err_d.append(_noneq_error(Gex, G, nt, ntau))

        G0 = green_from_H(nt, ntau, np.array([[EPS1]]), mu, beta, h, FERMION)
        F = HermMatrix(nt, ntau, 1, FERMION)
        Fcc = HermMatrix(nt, ntau, 1, FERMION)
        Gv = HermMatrix(nt, ntau, 1, FERMION)
        _vie_kernel_slice(-1, G0, Sig, F, Fcc, beta, h, k)
        vie2_mat(Gv, F, Fcc, G0, beta, k, tol=1e-13, maxiter=60)
        for n in range(k + 1):
            _vie_kernel_slice(n, G0, Sig, F, Fcc, beta, h, k)
        vie2_start(Gv, F, Fcc, G0, beta, h, k)
        for n in range(k + 1, nt + 1):
            _vie_kernel_slice(n, G0, Sig, F, Fcc, beta, h, k)
            vie2_timestep(n, Gv, F, Fcc, G0, beta, h, k)
        err_v.append(_noneq_error(Gex, Gv, nt, ntau))
    sl_d = fit_loglog(nt_list, err_d)
    sl_v = fit_loglog(nt_list, err_v)
    os.makedirs(out_dir, exist_ok=True)
    export_csv(os.path.join(out_dir, f"test_noneq_k{k}.csv"),
               ["Nt", "err_dyson", "err_vie2"],
               np.column_stack([nt_list, err_d, err_v]))
    _append_summary(out_dir, "test_noneq", k, {
        "slope_dyson": sl_d[0], "slope_vie2": sl_v[0],
        "rms_dyson": sl_d[2], "rms_vie2": sl_v[2]})
    return {"Nt": np.asarray(nt_list), "err_dyson": np.asarray(err_d),
            "err_vie2": np.asarray(err_v),
            "slope_dyson": sl_d[0], "slope_vie2": sl_v[0]}


# ------------------------------------------------------------ hubbard chain

def _chain_hopping(M: int, J: float) -> np.ndarray:
    h0 = np.zeros((M, M))
    for i in range(M - 1):
        h0[i, i + 1] = h0[i + 1, i] = -J
    return h0


class _SelfEnergy2B:
    """Second-order self-energy slices for the chain driver."""

    def __init__(self, G, U):
        self.G, self.U = G, U

    def attach(self, Sigma, beta, h, k):
        self.Sigma, self.k = Sigma, k

    def update(self, n):
        sigma_2b(n, self.G, self.U, self.Sigma)

    def update_start(self):
        for m in range(self.k + 1):
            sigma_2b(m, self.G, self.U, self.Sigma)


class _SelfEnergyGW:
    """GW: polarization, RPA susceptibility by vie2, then Sigma = i G dW."""

    def __init__(self, G, U):
        self.G, self.U = G, U
        M = G.d
        self.P = HermMatrix(G.nt, G.ntau, M, BOSON)
        self.chi = HermMatrix(G.nt, G.ntau, M, BOSON)
        self.PxU = HermMatrix(G.nt, G.ntau, M, BOSON)
        self.UxP = HermMatrix(G.nt, G.ntau, M, BOSON)

    def attach(self, Sigma, beta, h, k):
        self.Sigma, self.beta, self.h, self.k = Sigma, beta, h, k

    def update(self, n):
        polarization(n, self.G, self.P)
        chi_from_P(n, self.chi, self.P, self.U, self.PxU, self.UxP,
                   self.beta, self.h, self.k)
        sigma_gw(n, self.G, self.chi, self.U, self.Sigma)

    def update_start(self):
        for m in range(self.k + 1):
            polarization(m, self.G, self.P)
        chi_from_P(self.k, self.chi, self.P, self.U, self.PxU, self.UxP,
                   self.beta, self.h, self.k)
        for m in range(self.k + 1):
            sigma_gw(m, self.G, self.chi, self.U, self.Sigma)


class _SelfEnergyTPP:
    """Particle-particle ladder: [1 + Phi U] * T = Phi, Sigma = i U T U G^T."""

    def __init__(self, G, U):
        self.G, self.U = G, U
        M = G.d
        self.Phi = HermMatrix(G.nt, G.ntau, M, BOSON)
        self.T = HermMatrix(G.nt, G.ntau, M, BOSON)
        self.PhixU = HermMatrix(G.nt, G.ntau, M, BOSON)
        self.UxPhi = HermMatrix(G.nt, G.ntau, M, BOSON)

    def attach(self, Sigma, beta, h, k):
        self.Sigma, self.beta, self.h, self.k = Sigma, beta, h, k

    def _kernels(self, m):
        from .diagrams import _expand
        self.PhixU.set_timestep(m, self.Phi)
        self.UxPhi.set_timestep(m, self.Phi)
        self.PhixU.right_multiply(m, _expand(self.U, self.Phi.d))
        self.UxPhi.left_multiply(m, _expand(self.U, self.Phi.d))

    def update(self, n):
        phi_pp(n, self.G, self.Phi)
        self._kernels(n)
        if n == -1:
            vie2_mat(self.T, self.PhixU, self.UxPhi, self.Phi, self.beta, self.k)
        else:
            vie2_timestep(n, self.T, self.PhixU, self.UxPhi, self.Phi,
                          self.beta, self.h, self.k)
        sigma_tmatrix(n, self.G, self.T, self.U, self.Sigma)

    def update_start(self):
        for m in range(self.k + 1):
            phi_pp(m, self.G, self.Phi)
            self._kernels(m)
        vie2_start(self.T, self.PhixU, self.UxPhi, self.Phi, self.beta, self.h, self.k)
        for m in range(self.k + 1):
            sigma_tmatrix(m, self.G, self.T, self.U, self.Sigma)


_APPROX = {"2B": _SelfEnergy2B, "GW": _SelfEnergyGW, "TPP": _SelfEnergyTPP}


def run_hubbard_chain(approx: str, params: dict, out_dir=".", fmt="csv") -> dict:
    """Self-consistent propagation of the open Hubbard chain after an
    on-site quench; emits n_1(t), E_kin(t), E_tot(t) (per spin)."""
    if approx not in _APPROX:
        raise ValueError(f"approximation must be one of {sorted(_APPROX)}")
    M = int(params.get("Nsites", 2))
    U0 = float(params.get("U", 1.0))
    J = float(params.get("J", 1.0))
    beta = float(params.get("beta", 20.0))
    mu = float(params.get("MuChem", 0.0))
    nbar = float(params.get("Filling", 0.5))
    w0 = float(params.get("w0", 5.0))
    h = float(params.get("h", 0.025))
    if "Tmax" in params:
        tmax = float(params["Tmax"])
    else:
        if U0 == 0:
            raise KeyError("required input key __Tmax is missing for U=0")
        tmax = 5 * 2 * pi / U0
    ntau = int(params.get("Ntau", 400))
    k = int(params.get("SolveOrder", 5))
    nt = int(params.get("Nt", round(tmax / h)))
    mats_max_iter = int(params.get("MatsMaxIter", 100))
    mats_max_err = float(params.get("MatsMaxErr", 1e-8))
    boot_max_iter = int(params.get("BootstrapMaxIter", 30))
    boot_max_err = float(params.get("BootstrapMaxErr", 1e-8))
    corrector_steps = int(params.get("CorrectorSteps", 5))

    hop = _chain_hopping(M, J)
    eps0 = ContourScalarFn.constant(nt, hop)
    eps_mf = ContourScalarFn.constant(nt, hop)
    U = ContourScalarFn.constant(nt, np.array([[U0]]))

    G = green_from_H(nt, ntau, hop, mu, beta, h, FERMION, order=k)
    Sigma = HermMatrix(nt, ntau, M, FERMION)
    sigma = _APPROX[approx](G, U)
    sigma.attach(Sigma, beta, h, k)

    # Matsubara self-consistency
    gtemp = G.get_timestep(-1)
    mats_iters = mats_max_iter
    for it in range(mats_max_iter + 1):
        ham_mf(-1, G, U, eps0, nbar, eps_mf)
        sigma.update(-1)
        dyson_mat(G, Sigma, mu, eps_mf, beta, k)
        err = distance_norm2(G, _slice_to_herm(gtemp), -1)
        if err < mats_max_err:
            mats_iters = it
            break
        gtemp = G.get_timestep(-1)
    else:  # pragma: no cover
        warnings.warn(f"Matsubara loop not converged: err={err:.3e}")

    # instantaneous quench of the first on-site energy
    quench = np.zeros((M, M))
    quench[0, 0] = w0
    for n in range(0, nt + 1):
        eps0[n] = hop + quench

    # bootstrap (start-up self-consistency)
    gstart = [G.get_timestep(n) for n in range(k + 1)]
    boot_iters = boot_max_iter
    for it in range(boot_max_iter + 1):
        for n in range(k + 1):
            ham_mf(n, G, U, eps0, nbar, eps_mf)
        sigma.update_start()
        dyson_start(G, Sigma, mu, eps_mf, beta, h, k)
        err = sum(distance_norm2(G, _slice_to_herm(gstart[n]), n) for n in range(k + 1))
        if err < boot_max_err and it > 2:
            boot_iters = it
            break
        gstart = [G.get_timestep(n) for n in range(k + 1)]
    else:  # pragma: no cover
        warnings.warn(f"bootstrap loop not converged: err={err:.3e}")

    # predictor-corrector propagation
    for n in range(k + 1, nt + 1):
        extrapolate_timestep(G, n - 1, k)
        for _ in range(corrector_steps):
            ham_mf(n, G, U, eps0, nbar, eps_mf)
            sigma.update(n)
            dyson_timestep(n, G, Sigma, mu, eps_mf, beta, h, k)

    # observables (per spin)
    times = h * np.arange(nt + 1)
    n1 = np.empty(nt + 1)
    ekin = np.empty(nt + 1)
    etot = np.empty(nt + 1)
    for n in range(nt + 1):
        rho = G.density_matrix(n)
        n1[n] = rho[0, 0].real
        ekin[n] = float(np.real(np.trace(rho @ hop)))
        ham_mf(n, G, U, eps0, nbar, eps_mf)
        e1 = 0.5 * float(np.real(np.trace(rho @ (eps0[n] + eps_mf[n]))))
        etot[n] = e1 + correlation_energy(n, G, Sigma, beta=beta, h=h, k=k)

    os.makedirs(out_dir, exist_ok=True)
    export_csv(os.path.join(out_dir, f"hubbard_{approx}.csv"),
               ["t", "n1", "Ekin", "Etot"],
               np.column_stack([times, n1, ekin, etot]))
    meta = {"approx": approx, "Nsites": M, "U": U0, "J": J, "beta": beta,
            "MuChem": mu, "Filling": nbar, "w0": w0, "h": h, "Tmax": nt * h,
            "Tmax_rule": "5*2*pi/U unless overridden", "Ntau": ntau,
            "SolveOrder": k, "CorrectorSteps": corrector_steps,
            "mats_iterations": mats_iters, "bootstrap_iterations": boot_iters,
            "energy_convention": "per spin"}
    with open(os.path.join(out_dir, f"hubbard_{approx}_meta.json"), "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
    if fmt == "container":
        write_groups(os.path.join(out_dir, f"hubbard_{approx}.kbc"),
                     {"G": G, "Sigma": Sigma})
    return {"t": times, "n1": n1, "Ekin": ekin, "Etot": etot, "G": G,
            "Sigma": Sigma, "meta": meta}


def _slice_to_herm(sl):
    out = HermMatrix(sl.tstp if sl.tstp >= 0 else -1, sl.ntau, sl.d, sl.sig)
    out.set_timestep(sl.tstp, sl)
    return out


# ------------------------------------------------------------------- main

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="kadbaym",
                                     description="contour solver demo drivers")
    sub = parser.add_subparsers(dest="cmd", required=True)
    for name in ("gregory", "equilibrium", "nonequilibrium", "hubbard"):
        p = sub.add_parser(name)
        p.add_argument("input", nargs="?", help="input file with __Name=value lines")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--format", choices=("csv", "container"), default="csv")
    args = parser.parse_args(argv)
    params = parse_input(args.input) if args.input else {}
    t0 = time.perf_counter()
    if args.cmd == "gregory":
        k = int(params.get("SolveOrder", 5))
        res = run_gregory_test(k, args.out)
        print(f"gregory k={k}: fitted slope {res['slope']:+.3f}")
    elif args.cmd == "equilibrium":
        k = int(params.get("SolveOrder", 5))
        res = run_test_equilibrium(k, args.out)
        print(f"equilibrium k={k}: fourier slope {res['slope_fourier']:+.3f}, "
              f"fixpoint slope {res['slope_fixpoint']:+.3f}")
    elif args.cmd == "nonequilibrium":
        k = int(params.get("SolveOrder", 5))
        ntau = int(params.get("Ntau", 800))
        tmax = float(params.get("Tmax", 5.0))
        res = run_test_nonequilibrium(k, args.out, ntau=ntau, tmax=tmax)
        print(f"nonequilibrium k={k}: dyson slope {res['slope_dyson']:+.3f}, "
              f"vie2 slope {res['slope_vie2']:+.3f}")
    else:
        approx = str(params.get("Approx", "2B"))
        res = run_hubbard_chain(approx, params, args.out, fmt=args.format)
        drift = float(np.max(np.abs(res["Etot"] - res["Etot"][0])))
        print(f"hubbard {approx}: max |Etot(t)-Etot(0)| = {drift:.3e}")
    print(f"done in {time.perf_counter() - t0:.1f}s -> {args.out}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
