"""Commands of the laboratory command line.

Each command is a `LabCommand`: `execute()` computes and writes its
outputs, `run()` wraps it and turns any PumpWoodException into a JSON error
record and an exit code.
"""
import os
import sys
import logging
import traceback
import numpy as np
import pandas as pd
import simplejson as json
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TextIO
from pumpwood_communication.exceptions import PumpWoodException
from pumpwood_biharmonic.analytic import (
    ReducedParams, bubble_radial, bubble_laplacian_radial)
from pumpwood_biharmonic.config import RunConfig
from pumpwood_biharmonic.domain import AnnulusDomain, RadialGrid
from pumpwood_biharmonic.exceptions import (
    PumpwoodBiharmonicPreconditionException)
from pumpwood_biharmonic.expansion import (
    STARSTAR_ONSET_EPS, expansion_case, rescaled_boundary_values)
from pumpwood_biharmonic.green import h00_closed_form, measure_kN_flux
from pumpwood_biharmonic.quadrature import (
    QuadratureRule, constant_aN_closed_form, hole_term_from_identities,
    representation_identity_2, representation_identity_4)
from pumpwood_biharmonic.reduced_energy import (
    PsiModel, derivative_sign_changes, energy_eval, energy_expansion_check,
    psi_critical_point, psi_eval, psi_gradient)
from pumpwood_biharmonic.scaling import fit_scaling, loglog_slope
from pumpwood_biharmonic.solver import (
    bubble_projection, continuation_in_eps, independent_residual,
    solve_nonlinear)


logger = logging.getLogger(__name__)

ENERGY_SWEEP_EPS = (1e-2, 1e-3, 1e-4)
"""Hole radii of the energy deviation table of the psi command."""


def _to_builtin(value):
    """JSON fallback for numpy scalars and arrays."""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(
        "Object of type {} is not JSON serializable".format(
            type(value).__name__))


def dumps(document: dict) -> str:
    """Deterministic JSON text: sorted keys, shortest repr floats."""
    return json.dumps(
        document, sort_keys=True, indent=2, ignore_nan=True,
        default=_to_builtin) + "\n"


def write_error_record(exception: PumpWoodException,
                       output_dir: Optional[str] = None,
                       stdout: TextIO = None) -> int:
    """Write {type, message, payload} of an exception, return its exit code.

    The record goes to stdout and, when output_dir is set, to
    `<output_dir>/error.json`.
    """
    exception_dict = exception.to_dict()
    record = {
        "type": exception_dict.get("type", type(exception).__name__),
        "message": exception_dict.get("message", str(exception)),
        "payload": exception_dict.get("payload", {})}
    text = dumps(record)
    (stdout or sys.stdout).write(text)
    if output_dir is not None:
        try:
            os.makedirs(output_dir, exist_ok=True)
            path = os.path.join(output_dir, "error.json")
            with open(path, "w", encoding="utf-8", newline="\n") as file:
                file.write(text)
        except OSError as error:
            logger.warning("could not write error record: %s", error)
    return int(getattr(exception, "exit_code", 1))


class LabCommand(ABC):
    """Abstract command with the error handling of the laboratory."""

    def __init__(self, config: RunConfig, stdout: TextIO = None):
        """__init__.

        Args:
            config (RunConfig):
                Validated effective configuration.
            stdout (TextIO):
                Stream receiving the summary document, sys.stdout when
                not set.
        """
        self.config = config
        self.stdout = stdout or sys.stdout

    @property
    @abstractmethod
    def name(self) -> str:
        """Command name, used as prefix of the output files."""
        pass

    @abstractmethod
    def execute(self) -> int:
        """Compute, write outputs and return the exit code."""
        pass

    @property
    def rule(self) -> QuadratureRule:
        """Quadrature rule of the configured size."""
        return QuadratureRule(
            nodes=self.config.quadrature_nodes,
            panels=self.config.quadrature_panels)

    def psi_model(self, hole: str = "effective") -> PsiModel:
        """Reduced energy model with the configured quadrature."""
        return PsiModel.build(self.config.dimension, self.rule, hole=hole)

    def parallel_map(self, fun: Callable, items: Sequence) -> List:
        """Map over items with the configured threads, keeping order."""
        items = list(items)
        if self.config.threads == 1 or len(items) < 2:
            return [fun(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.config.threads) as pool:
            return list(pool.map(fun, items))

    def _path(self, filename: str) -> str:
        os.makedirs(self.config.output_dir, exist_ok=True)
        return os.path.join(self.config.output_dir, filename)

    def write_json(self, filename: str, document: dict,
                   echo: bool = True) -> str:
        """Write a JSON document with the effective config attached."""
        document = dict(document)
        document["command"] = self.name
        document["config"] = self.config.to_dict()
        text = dumps(document)
        with open(self._path(filename), "w", encoding="utf-8",
                  newline="\n") as file:
            file.write(text)
        if echo:
            self.stdout.write(text)
        return text

    def write_csv(self, filename: str, frame: pd.DataFrame) -> None:
        """Write a per eps table, full precision and LF line endings."""
        frame.to_csv(
            self._path(filename), index=False, float_format="%.17g",
            lineterminator="\n")

    def error_handler(self, exception: PumpWoodException) -> int:
        """Write the error record and return the exit code."""
        logger.error("%s failed", self.name)
        logger.debug("traceback:\n%s", traceback.format_exc())
        return write_error_record(
            exception, self.config.output_dir, self.stdout)

    def run(self) -> int:
        """Execute the command and return its exit code."""
        try:
            return self.execute()
        except PumpWoodException as e:
            return self.error_handler(exception=e)


class ConstantsCommand(LabCommand):
    """Exponents, quadrature constants, H(0,0) and d*."""

    name = "constants"

    def execute(self) -> int:
        """Compute the constants table."""
        dim = self.config.dimension
        model = self.psi_model()
        stated = PsiModel(
            dim=dim, constants=model.constants, H00=model.H00,
            hole="stated")
        constants = model.constants
        flux = measure_kN_flux(dim, degree=self.config.harmonic_degree)
        critical = psi_critical_point(model)
        document = {
            "N": dim.N, "p": dim.p, "p_exact": str(dim.p_exact),
            "sigma": float(dim.sigma), "sigma_exact": str(dim.sigma),
            "kappa": float(dim.kappa), "kappa_exact": str(dim.kappa),
            "alphaN": dim.alpha, "sphere_measure": dim.sphere_measure,
            "kN_measured": constants.kN, "kN_theory": dim.k_theory,
            "kN_flux": flux.k_measured,
            "kN_flux_relative_error": flux.relative_error,
            "gammaN": dim.gamma_stated,
            "aN": constants.aN,
            "aN_closed_form": constant_aN_closed_form(dim),
            "bN": constants.bN, "cN": constants.cN,
            "b_eff": constants.b_eff,
            "bubble_energy": constants.bubble_energy,
            "H00": model.H00, "H00_closed_form": h00_closed_form(dim),
            "d_star": critical.d_star,
            "d_star_stated_hole": psi_critical_point(stated).d_star,
            "self_convergence": dict(constants.self_convergence)}
        self.write_json("constants.json", document)
        return 0


class IdentitiesCommand(LabCommand):
    """Green representation identities at a few shifts tau."""

    name = "identities"

    def taus(self) -> List[np.ndarray]:
        """0, 0.3 e1, e1 and a seeded random shift of length 0.7."""
        N = self.config.dim
        e1 = np.zeros(N)
        e1[0] = 1.0
        rng = np.random.default_rng(self.config.seed)
        direction = rng.standard_normal(N)
        direction /= np.linalg.norm(direction)
        return [np.zeros(N), 0.3 * e1, e1, 0.7 * direction]

    def execute(self) -> int:
        """Evaluate both identities and the hole term at every shift."""
        dim = self.config.dimension
        rule = self.rule
        tolerance = self.config.tolerances["identity"]
        model = self.psi_model()
        k_n = model.constants.kN
        b_eff = model.constants.b_eff

        def case(tau):
            r4 = representation_identity_4(dim, tau, rule)
            r2 = representation_identity_2(dim, tau, rule)
            t = float(np.linalg.norm(tau))
            rebuilt = hole_term_from_identities(dim, tau, k_n, rule)
            direct = -b_eff * float(
                bubble_laplacian_radial(dim, t) * bubble_radial(dim, t))
            return {
                "tau": tau.tolist(),
                "identity_4": r4.to_dict(),
                "identity_2": r2.to_dict(),
                "identity_4_passed": r4.passed(tolerance),
                "identity_2_passed": r2.passed(tolerance),
                "hole_term": rebuilt, "hole_term_direct": direct,
                "hole_term_relative_error": abs(rebuilt - direct) / abs(
                    direct)}

        cases = self.parallel_map(case, self.taus())
        flux = measure_kN_flux(dim, degree=self.config.harmonic_degree)
        document = {
            "N": dim.N, "cases": cases, "kN_measured": k_n,
            "kN_theory": dim.k_theory, "kN_flux": flux.k_measured,
            "tolerance": tolerance,
            "passed": all(
                c["identity_4_passed"] and c["identity_2_passed"]
                for c in cases)}
        self.write_json("identities.json", document)
        return 0


class PsiCommand(LabCommand):
    """Critical point of the reduced energy and the energy check."""

    name = "psi"

    def execute(self) -> int:
        """Locate d*, classify it and test the energy expansion."""
        dim = self.config.dimension
        model = self.psi_model()
        critical = psi_critical_point(model)
        stated = psi_critical_point(PsiModel(
            dim=dim, constants=model.constants, H00=model.H00,
            hole="stated"))
        tolerance = self.config.tolerances["energy"]
        check = energy_expansion_check(
            model, eps=self.config.energy_eps, d=critical.d_star,
            tolerance=tolerance)
        numeric = energy_expansion_check(
            model, eps=self.config.energy_eps, d=critical.d_star,
            tolerance=tolerance, projection="numeric")
        sweep = self.parallel_map(
            lambda eps: energy_expansion_check(
                model, eps=eps, d=critical.d_star,
                tolerance=tolerance).to_dict(), ENERGY_SWEEP_EPS)
        document = {
            "N": dim.N, "b": model.b, "c": model.c, "H00": model.H00,
            "critical_point": critical.to_dict(),
            "critical_point_stated_hole": stated.to_dict(),
            "psi_at_critical": psi_eval(model, critical.d_star),
            "gradient_at_critical": psi_gradient(
                model, critical.d_star).tolist(),
            "derivative_sign_changes": derivative_sign_changes(model),
            "energy_check": check.to_dict(),
            "energy_check_numeric": numeric.to_dict(),
            "energy_check_by_eps": sweep}
        self.write_json("psi.json", document)
        return 0


class SolveCommand(LabCommand):
    """Single nonlinear solve at the first configured eps."""

    name = "solve"

    def execute(self) -> int:
        """Solve from the projected bubble at the predicted weight."""
        cfg = self.config
        dim = cfg.dimension
        eps = float(cfg.eps[0])
        d_star = psi_critical_point(self.psi_model()).d_star
        mu = d_star * eps ** float(dim.sigma)
        dom = AnnulusDomain(dim=dim, inner=eps)
        grid = RadialGrid.graded(dom, cfg.nodes, grading=cfg.grading)
        grid.check_resolution(mu)
        init = bubble_projection(dim, dom, grid, mu)
        report = solve_nonlinear(dim, dom, init, cfg.solver, eps=eps)
        energy = None
        if report.succeeded:
            energy = energy_eval(dim, dom, report.u)
        document = {
            "N": dim.N, "eps": eps, "d_star": d_star, "mu_predicted": mu,
            "converged": report.converged, "trivial": report.trivial,
            "positivity_violated": report.positivity_violated,
            "newton_iterations": report.newton_iterations,
            "final_residual": report.final_residual,
            "independent_residual": independent_residual(dim, report),
            "mu_estimate": report.mu_estimate,
            "d_estimate": report.d_estimate(dim), "energy": energy}
        self.write_csv("solve_profile.csv", pd.DataFrame({
            "r": report.u.r, "u": report.u.values, "w": report.w.values}))
        self.write_json("solve.json", document)
        return 0 if report.succeeded else 1


class ScalingCommand(LabCommand):
    """Continuation in eps and the log-log fit of mu against eps."""

    name = "scaling"

    def execute(self) -> int:
        """Run the continuation, write the table and the fit summary."""
        cfg = self.config
        dim = cfg.dimension
        d_star = psi_critical_point(self.psi_model()).d_star
        reports = continuation_in_eps(
            dim, cfg.eps_schedule, d_star, nodes=cfg.nodes, cfg=cfg.solver,
            grading=cfg.grading)
        rows = []
        for report in reports:
            energy = float("nan")
            if report.succeeded:
                dom = AnnulusDomain(dim=dim, inner=report.eps)
                energy = energy_eval(dim, dom, report.u)
            d_eps = report.d_estimate(dim)
            rows.append({
                "eps": report.eps,
                "mu": np.nan if report.mu_estimate is None
                else report.mu_estimate,
                "d_eps": np.nan if d_eps is None else d_eps,
                "newton_iters": report.newton_iterations,
                "residual": report.final_residual,
                "energy": energy})
        self.write_csv("scaling.csv", pd.DataFrame(
            rows, columns=[
                "eps", "mu", "d_eps", "newton_iters", "residual",
                "energy"]))

        failure_index = None
        if not reports[-1].succeeded:
            failure_index = len(reports) - 1
        good = [r for r in reports if r.succeeded]
        summary = {
            "N": dim.N, "d_star": d_star, "sigma": float(dim.sigma),
            "failure_index": failure_index, "points": len(good),
            "tolerance": cfg.tolerances["slope"], "slope": None,
            "relative_slope_error": None, "passed": False}
        try:
            fit = fit_scaling(
                [(r.eps, r.mu_estimate) for r in good], dim=dim)
        except PumpwoodBiharmonicPreconditionException as e:
            summary["fit_error"] = e.to_dict().get("message", str(e))
        else:
            d_variation = fit.d_variation(1.0)
            summary.update(fit.to_dict())
            summary.update({
                "passed": fit.passed(cfg.tolerances["slope"]),
                "d_variation_last_decade": d_variation,
                "d_variation_passed": bool(
                    d_variation <= cfg.tolerances["d_variation"])})
        if good:
            d_smallest = good[-1].d_estimate(dim)
            d_error = abs(d_smallest - d_star) / d_star
            summary.update({
                "eps_smallest": good[-1].eps,
                "d_eps_smallest": d_smallest,
                "d_star_relative_error": d_error,
                "d_star_passed": bool(
                    d_error <= cfg.tolerances["d_star"])})
        self.write_json("scaling_summary.json", summary)
        return 1 if failure_index is not None else 0


class VerifyExpansionCommand(LabCommand):
    """Remainder brackets and error term sizes along eps."""

    name = "verify-expansion"

    def execute(self) -> int:
        """Check the expansion at every configured eps."""
        cfg = self.config
        dim = cfg.dimension
        eps_values = sorted((float(e) for e in cfg.eps), reverse=True)
        if len(set(eps_values)) < 3:
            msg = (
                "Expansion trend needs at least 3 distinct eps values, "
                "got {eps}")
            raise PumpwoodBiharmonicPreconditionException(
                message=msg, payload={"eps": eps_values})
        d_star = psi_critical_point(self.psi_model()).d_star

        def case(eps):
            report = expansion_case(
                dim, eps, d_star, nodes=cfg.nodes, region=cfg.region)
            rp = ReducedParams(d=d_star, tau=(0.0,) * dim.N, eps=eps)
            boundary = rescaled_boundary_values(
                dim, AnnulusDomain(dim=dim, inner=eps), rp)
            return report, boundary

        results = self.parallel_map(case, eps_values)
        reports = [r for r, _ in results]
        trend = cfg.tolerances["trend"]
        slope_r, _, _ = loglog_slope(
            eps_values, [r.sup_ratio_R for r in reports])
        slope_dr, _, _ = loglog_slope(
            eps_values, [r.sup_ratio_dR for r in reports])
        slope_e, _, _ = loglog_slope(
            eps_values, [r.E_starstar for r in reports])
        kappa = float(dim.kappa)
        e_error = abs(slope_e - kappa) / kappa
        cases = []
        for report, boundary in results:
            entry = report.to_dict()
            entry["boundary"] = boundary
            entry["outer_bound_passed"] = bool(
                abs(boundary["outer"]) <= boundary["outer_bound"])
            entry["hole_bound_passed"] = bool(
                abs(boundary["hole"]) <= boundary["hole_bound"])
            cases.append(entry)
        document = {
            "N": dim.N, "d": d_star, "region": cfg.region, "cases": cases,
            "verdicts": {
                "sup_ratio_R_slope": slope_r,
                "sup_ratio_dR_slope": slope_dr,
                "trend_threshold": trend,
                "bounded": bool(slope_r >= trend and slope_dr >= trend),
                "E_starstar_slope": slope_e, "kappa": kappa,
                "E_starstar_relative_error": e_error,
                "E_starstar_passed": bool(
                    e_error <= cfg.tolerances["slope"]),
                "E_starstar_preasymptotic": bool(
                    min(eps_values) >= STARSTAR_ONSET_EPS)}}
        self.write_json("verify_expansion.json", document)
        return 0


COMMANDS = {
    command.name: command for command in (
        ConstantsCommand, IdentitiesCommand, PsiCommand, SolveCommand,
        ScalingCommand, VerifyExpansionCommand)}
"""Command classes by sub-command name."""
