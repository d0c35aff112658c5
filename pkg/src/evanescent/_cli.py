import json
import math
import sys
import warnings
from collections.abc import Iterator
from contextlib import contextmanager, suppress
from pathlib import Path

import typer
from pydantic import ValidationError

import evanescent
from evanescent._errors import ConfigError, DomainError
from evanescent._logging import configure_logging, logger
from evanescent._settings import (
    BarrierSpec,
    CommandConfig,
    DispersionConfig,
    FTIRConfig,
    NumericsSettings,
    OutputFormat,
    TIRConfig,
    WKBConfig,
    load_config,
)
from evanescent._tables import Table, render
from evanescent.wkb_phase import PotentialProfile

__all__ = ["app", "main"]

app = typer.Typer(
    name="evanescent",
    add_completion=False,
    context_settings={
        "help_option_names": ["-h", "--help"],
    },
)

WKB_HEADER = ("kind", "x_a", "x_b", "S_r", "S_i", "exp_minus_S_r", "tau_im")
# energy of the built-in barrier scenario when none is configured
DEFAULT_BARRIER_ENERGY = 0.5


def _show_version_and_exit(value: bool) -> None:
    if value:
        import numpy
        import scipy

        typer.echo(f"evanescent v{evanescent.__version__}")
        typer.echo(f"numpy v{numpy.__version__}")
        typer.echo(f"scipy v{scipy.__version__}")
        raise typer.Exit()


@app.callback()
def _main(
    version: bool = typer.Option(
        None,
        "--version",
        callback=_show_version_and_exit,
        help="Show version and exit.",
        is_eager=True,
    ),
    log_level: str = typer.Option(
        "WARNING",
        "--log-level",
        help="Log level for messages on stderr (DEBUG, INFO, WARNING, ...).",
    ),
) -> None:
    """evanescent: evanescent-wave scans and self-checks (v{version}).

    For additional help on a specific command: type `evanescent [command] --help`
    """
    # fix for windows CI encoding of greek letters
    if getattr(sys.stdout, "encoding", None) != "utf-8":
        with suppress(AttributeError):  # pragma: no cover
            sys.stdout.reconfigure(encoding="utf-8")  # type: ignore [union-attr]
    configure_logging(log_level.upper())


if "mkdocs" in sys.argv[0]:  # pragma: no cover
    _main.__doc__ = (_main.__doc__ or "").replace(" (v{version})", "")
else:
    _main.__doc__ = typer.style(
        (_main.__doc__ or "").format(version=evanescent.__version__),
        fg=typer.colors.BRIGHT_YELLOW,
    )


# ------------------------------- Plumbing -------------------------------------


CONFIG_OPTION = typer.Option(
    None,
    "-c",
    "--config",
    file_okay=True,
    dir_okay=False,
    help="JSON config file. Without one the default scenario runs.",
)
OUT_OPTION = typer.Option(
    None, "-o", "--out", dir_okay=False, help="Write the table here (default stdout)."
)
FORMAT_OPTION = typer.Option(None, "-f", "--format", help="Output format: csv or json.")


@contextmanager
def _exit_codes() -> Iterator[None]:
    """Map failures to exit codes: 2 for config errors, 3 for domain errors."""
    try:
        yield
    except (ConfigError, ValidationError) as e:
        typer.secho(f"config error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(2) from e
    except DomainError as e:
        typer.secho(f"{type(e).__name__}: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(3) from e


def _settings(cfg: CommandConfig) -> NumericsSettings:
    try:
        return cfg.settings()
    except ValidationError as e:
        raise ConfigError(f"Invalid 'numerics' block:\n{e}") from e


def _resolve_format(
    flag: str | None, cfg: CommandConfig, default: OutputFormat = "csv"
) -> OutputFormat:
    fmt = flag or cfg.format or default
    if fmt not in ("csv", "json"):
        raise ConfigError(f"Unknown format {fmt!r}; use csv or json.")
    return fmt  # type: ignore [return-value]


def _emit(text: str, out: Path | None, cfg: CommandConfig) -> None:
    target = out or cfg.out
    if target is None:
        typer.echo(text, nl=False)
    else:
        target.write_text(text)
        logger.info("wrote %s", target)


def _summary(**values: object) -> None:
    parts = []
    for key, value in values.items():
        if value is None:
            value = "none"
        elif isinstance(value, float):
            value = f"{value:.6g}"
        parts.append(f"{key}={value}")
    typer.echo(" ".join(parts), err=True)


# ------------------------------- Commands -------------------------------------


@app.command()
def dispersion(
    config: Path | None = CONFIG_OPTION,
    out: Path | None = OUT_OPTION,
    fmt: str | None = FORMAT_OPTION,
) -> None:
    """Phase and group velocity of a box mode over a frequency sweep."""
    from evanescent.waveguide import (
        DISPERSION_HEADER,
        cutoff_frequency,
        dispersion_scan,
    )

    with _exit_codes():
        cfg = load_config(config, DispersionConfig)
        fmt_ = _resolve_format(fmt, cfg)
        points = dispersion_scan(cfg.mode, cfg.omega.values())
        _emit(render(Table.from_rows(DISPERSION_HEADER, points), fmt_), out, cfg)
        _summary(
            omega_c=cutoff_frequency(cfg.mode),
            propagating=f"{sum(p.propagating for p in points)}/{len(points)}",
        )


@app.command()
def tir(
    config: Path | None = CONFIG_OPTION,
    out: Path | None = OUT_OPTION,
    fmt: str | None = FORMAT_OPTION,
) -> None:
    """Reflection at a single interface over a sweep of incidence angles."""
    from evanescent.layered import TIR_HEADER, critical_angle, tir_scan

    with _exit_codes():
        cfg = load_config(config, TIRConfig)
        fmt_ = _resolve_format(fmt, cfg)
        rows = tir_scan(cfg.n1, cfg.n2, cfg.theta.values(), cfg.omega, cfg.polarization)
        _emit(render(Table.from_rows(TIR_HEADER, rows), fmt_), out, cfg)
        _summary(theta_c=critical_angle(cfg.n1, cfg.n2))


@app.command()
def ftir(
    config: Path | None = CONFIG_OPTION,
    out: Path | None = OUT_OPTION,
    fmt: str | None = FORMAT_OPTION,
) -> None:
    """Frustrated total internal reflection: transmission and delay vs gap width."""
    from evanescent.layered import FTIR_HEADER, Incidence, critical_angle, ftir_scan

    with _exit_codes():
        cfg = load_config(config, FTIRConfig)
        settings = _settings(cfg)
        fmt_ = _resolve_format(fmt, cfg)
        theta0 = cfg.incidence_angle()
        theta_c = critical_angle(cfg.stack.entry.n, cfg.gap.n)
        if theta_c is None or theta0 <= theta_c:
            warnings.warn(
                f"theta0={theta0:.6g} is not above the critical angle "
                f"({theta_c if theta_c is None else format(theta_c, '.6g')}); "
                "the gap carries a propagating wave and the delay will not saturate.",
                RuntimeWarning,
                stacklevel=2,
            )
        inc = Incidence(omega=cfg.omega, theta0=theta0, polarization=cfg.polarization)
        rows = ftir_scan(
            cfg.stack,
            cfg.d.values() * cfg.wavelength,
            inc,
            gap_index=cfg.gap_index,
            d_omega=cfg.d_omega,
            hold=cfg.hold,
            rel_step=settings.group_delay_rel_step,
        )
        _emit(render(Table.from_rows(FTIR_HEADER, rows), fmt_), out, cfg)

        last = rows[-1]
        decade = next(r for r in rows if r.d >= last.d / 10)
        change = math.inf
        if last.tau_g:
            change = abs(last.tau_g - decade.tau_g) / abs(last.tau_g)
        _summary(
            theta0=theta0,
            tau_g_at_max_d=last.tau_g,
            rel_change_last_decade=change,
        )


def _load_potential(cfg: WKBConfig) -> tuple[PotentialProfile, float]:
    if cfg.potential is not None:
        try:
            profile = PotentialProfile.from_json(cfg.potential.read_text())
        except (OSError, ValueError) as e:
            raise ConfigError(f"Cannot load potential {cfg.potential}: {e}") from e
        energy = cfg.energy or 0.0
    else:
        barrier = cfg.barrier or BarrierSpec()
        energy = DEFAULT_BARRIER_ENERGY if cfg.energy is None else cfg.energy
        profile = PotentialProfile(barrier.grid(), barrier.sample())
    return profile.shifted(-energy), energy


@app.command()
def wkb(
    config: Path | None = CONFIG_OPTION,
    out: Path | None = OUT_OPTION,
    fmt: str | None = FORMAT_OPTION,
) -> None:
    """Region classification, actions and imaginary-time lapses of a potential."""
    from evanescent.wkb_phase import RegionKind, wkb_report

    with _exit_codes():
        cfg = load_config(config, WKBConfig)
        settings = _settings(cfg)
        fmt_ = _resolve_format(fmt, cfg, default="json")
        V, energy = _load_potential(cfg)
        report = wkb_report(
            V,
            cfg.dE,
            mass=settings.mass,
            hbar=settings.hbar,
            rel_tol=settings.classify_rel_tol,
        )
        if fmt_ == "json":
            text = json.dumps(report.to_dict(), indent=2) + "\n"
        else:
            rows = [
                (str(r.kind), r.x_a, r.x_b, r.S_r, r.S_i, r.decay_factor, r.tau_im)
                for r in report.regions
            ]
            text = render(Table(WKB_HEADER, rows), "csv")
        _emit(text, out, cfg)
        forbidden = [r for r in report.regions if r.kind is RegionKind.FORBIDDEN]
        _summary(
            energy=energy,
            regions=len(report.regions),
            forbidden=len(forbidden),
            S_r=sum(r.S_r for r in forbidden) if forbidden else None,
        )


@app.command()
def verify(
    config: Path | None = CONFIG_OPTION,
    only: list[str] | None = typer.Option(
        None, "--only", help="Run only these criteria (repeatable)."
    ),
) -> None:
    """Run the self-checks; exit 1 if any fails."""
    from evanescent._verify import run_criteria

    with _exit_codes():
        cfg = load_config(config, CommandConfig)
        settings = _settings(cfg)
        try:
            results = run_criteria(only or None, settings)
        except KeyError as e:
            raise ConfigError(str(e.args[0])) from e
    for result in results:
        typer.echo(result.line())
    n_pass = sum(r.passed for r in results)
    _summary(passed=f"{n_pass}/{len(results)}")
    if n_pass != len(results):
        raise typer.Exit(1)


def main() -> None:
    """Main entry point for the evanescent command line."""
    app()
