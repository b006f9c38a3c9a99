"""MCP server exposing the simulator's eigensystem and read-out operations."""

from fastmcp import FastMCP

from . import __version__
from .config import parse_config
from .hamiltonian import TARGETS, adiabatic_timescale, pseudo_faraday_eigensystem, resonant_detuning_for_readout
from .optics import beta_coupling, branching_ratio
from .readout import run_readout

mcp = FastMCP(
    name="Floquet Read-out Simulator",
    version=__version__,
    instructions="""Use the tools from this server to evaluate the quantum-dot spin read-out model.

Every tool takes the base preset ("paper-sim" or "paper-branching") and optional overrides in
section.key=value form, e.g. "drive.Omega1p_GHz=150" or "readout.target=\\"z+\\"".

Frequencies are f = ω/2π in GHz, fields in tesla, times in ns.

Capabilities: labeled dressed eigensystem, branching ratio, resonant read-out detuning, full read-out summary.

qd_readout_summary propagates two 500 ns trajectories and may take several seconds."""
)


def _config(preset: str, overrides: list[str] | None):
    return parse_config(overrides=overrides or [], preset=preset)


@mcp.tool
def qd_eigensystem(preset: str = "paper-sim", overrides: list[str] | None = None) -> dict:
    """Labeled pseudo-Faraday eigensystem of the time-independent Hamiltonian.

    Args:
        preset: Base parameter preset
        overrides: section.key=value strings applied on top of the preset

    Returns:
        Dictionary with per-label frequency (GHz) and eigenvector, plus the adiabatic timescale
        or dict with 'error' key on failure
    """
    try:
        drive = _config(preset, overrides).drive
        es = pseudo_faraday_eigensystem(drive)
        return {"states": es.as_dict(), "adiabatic_timescale_ns": adiabatic_timescale(drive)}
    except Exception as e:
        return {"error": f"Failed to compute eigensystem: {str(e)}"}


@mcp.tool
def qd_branching_ratio(preset: str = "paper-branching", overrides: list[str] | None = None) -> dict:
    """Branching ratio r_B and the interference coupling |β| of the dressed states.

    Args:
        preset: Base parameter preset
        overrides: section.key=value strings applied on top of the preset

    Returns:
        Dictionary with r_B and beta_abs or dict with 'error' key on failure
    """
    try:
        drive = _config(preset, overrides).drive
        es = pseudo_faraday_eigensystem(drive)
        return {"r_B": branching_ratio(drive, es=es), "beta_abs": abs(beta_coupling(drive, es=es))}
    except Exception as e:
        return {"error": f"Failed to compute branching ratio: {str(e)}"}


@mcp.tool
def qd_resonant_detuning(preset: str = "paper-sim", overrides: list[str] | None = None) -> dict:
    """Read-out laser detuning Δ₂ (GHz) resonant with each cycling transition.

    Args:
        preset: Base parameter preset
        overrides: section.key=value strings applied on top of the preset

    Returns:
        Dictionary mapping target ("z+", "z-") to Δ₂ in GHz or dict with 'error' key on failure
    """
    try:
        drive = _config(preset, overrides).drive
        return {target: resonant_detuning_for_readout(drive, target) for target in TARGETS}
    except Exception as e:
        return {"error": f"Failed to compute resonant detuning: {str(e)}"}


@mcp.tool
def qd_readout_summary(preset: str = "paper-sim", overrides: list[str] | None = None) -> dict:
    """Simulate the read-out and report the optimal window.

    Args:
        preset: Base parameter preset
        overrides: section.key=value strings applied on top of the preset

    Returns:
        Dictionary with T_star_ns, F_star, D_star, Delta2_GHz, M, route and
        adiabatic_timescale_ns or dict with 'error' key on failure
    """
    try:
        return run_readout(_config(preset, overrides).readout).summary()
    except Exception as e:
        return {"error": f"Failed to run read-out: {str(e)}"}


def serve(show_banner: bool = True) -> None:
    """Run the MCP server on stdio."""
    mcp.run(transport="stdio", show_banner=show_banner)
