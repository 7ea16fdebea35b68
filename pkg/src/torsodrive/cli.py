"""Operator command line: calibrate, drive, replay, metrics, serve.

Every command is deterministic under a fixed seed; the default seed is a
constant so repeated runs (and CI) reproduce byte-identical artifacts. Set
QOLO_SIM_SEED to override it globally, or pass --seed (the literal `random`
opts out of reproducibility). QOLO_SIM_CONFIG may point to a JSON file with
{"gains": ..., "sim": ...} defaults; explicit --gains/--sim-config flags win.
"""

from __future__ import annotations

import asyncio
import json
import os
import secrets
import signal
import sys
import time
from pathlib import Path

import click

from . import calibration as cal
from . import metrics as met
from .driver import (
    Circuit,
    DriverConfig,
    SyntheticDriver,
    load_circuit,
    start_pose,
    synthetic_calibration_sweep,
)
from .errors import TorsoDriveError
from .intent import GainConfig
from .sensor import SensorLayout, default_layout, load_layout
from .service import ServiceConfig, TeleopServer, TeleopSession
from .sim import SimConfig, TrialLog, run_loop

DEFAULT_SEED = 1234


def resolve_seed(value: str | None) -> int | None:
    """Flag value -> seed; env QOLO_SIM_SEED -> constant default -> `random`."""
    if value is None:
        value = os.environ.get("QOLO_SIM_SEED", str(DEFAULT_SEED))
    if value == "random":
        return secrets.randbits(32)
    try:
        return int(value)
    except ValueError:
        raise click.BadParameter(f"seed must be an integer or 'random', got {value!r}")


def env_config() -> dict:
    path = os.environ.get("QOLO_SIM_CONFIG")
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def resolve_layout(path: str | None) -> SensorLayout:
    return load_layout(path) if path else default_layout()


def resolve_gains(path: str | None) -> GainConfig:
    if path:
        with open(path, encoding="utf-8") as fh:
            return GainConfig.from_dict(json.load(fh))
    data = env_config().get("gains")
    return GainConfig.from_dict(data) if data else GainConfig()


def resolve_sim() -> SimConfig:
    data = env_config().get("sim")
    return SimConfig.from_dict(data) if data else SimConfig()


def resolve_profile(path: str | None, layout: SensorLayout) -> cal.CalibrationProfile:
    if path:
        return cal.load_profile(path, layout)
    return cal.default_profile(layout)


@click.group()
def main():
    """Torso-pressure HMI control stack: calibration, simulation, teleop."""


@main.command()
@click.option("--layout", "layout_path", type=click.Path(exists=True), help="Layout JSON.")
@click.option("--out", "out_path", type=click.Path(), default="profile.json", show_default=True)
@click.option("--p-max", default=1.0, show_default=True, help="Saturation pressure (raw units).")
@click.option("--dwell", default=5.0, show_default=True, help="Seconds per sweep posture.")
@click.option("--rest", default=5.0, show_default=True, help="Seconds of resting recording.")
@click.option("--rate", default=150, show_default=True, help="Sampling rate, Hz.")
@click.option("--noise", default=0.01, show_default=True, help="Synthetic sensor noise fraction.")
@click.option(
    "--postures", default="-0.8,-0.4,0,0.4,0.8", show_default=True,
    help="Ground-truth posture cops of the synthetic user (five values).",
)
@click.option("--seed", default=None, help="Integer seed or 'random'.")
def calibrate(layout_path, out_path, p_max, dwell, rest, rate, noise, postures, seed):
    """Run the guided sweep against the synthetic user and write a profile.

    Interactive (human) calibration is hosted by `torsodrive serve` instead.
    """
    layout = resolve_layout(layout_path)
    try:
        cops = tuple(float(v) for v in postures.split(","))
        rest_frames, sweep = synthetic_calibration_sweep(
            layout,
            cops,
            p_max=p_max,
            dwell_seconds=dwell,
            rest_seconds=rest,
            rate=rate,
            cfg=DriverConfig(posture_noise=noise),
            seed=resolve_seed(seed),
        )
        profile = cal.calibrate(rest_frames, sweep, p_max=p_max)
    except TorsoDriveError as exc:
        raise click.ClickException(str(exc))
    cal.save_profile(profile, out_path)
    click.echo(f"profile written to {out_path}")
    click.echo("alphas: " + " ".join(f"{a:.4f}" for a in profile.alphas))
    click.echo("betas:  " + " ".join(f"{b:.4f}" for b in profile.betas))
    click.echo("verdict: valid (ordering and saturation checks passed)")


@main.command()
@click.option("--layout", "layout_path", type=click.Path(exists=True))
@click.option("--profile", "profile_path", type=click.Path(exists=True))
@click.option("--gains", "gains_path", type=click.Path(exists=True))
@click.option("--circuit", "circuit_path", type=click.Path(exists=True))
@click.option("--laps", default=None, type=int, help="Override the circuit lap count.")
@click.option("--out", "out_path", type=click.Path(), default="trial.csv", show_default=True)
@click.option("--duration", default=120.0, show_default=True, help="Simulated budget, s.")
@click.option("--seed", default=None, help="Integer seed or 'random'.")
def drive(layout_path, profile_path, gains_path, circuit_path, laps, out_path, duration, seed):
    """Closed-loop figure-8 run with the synthetic driver; exit 0 iff completed."""
    layout = resolve_layout(layout_path)
    try:
        profile = resolve_profile(profile_path, layout)
        gains = resolve_gains(gains_path)
        circuit = load_circuit(circuit_path) if circuit_path else Circuit()
        if laps is not None:
            circuit = Circuit(
                markers=circuit.markers, laps=laps, waypoint_radius=circuit.waypoint_radius
            )
        cfg = DriverConfig()
        driver = SyntheticDriver(
            layout, profile, gains, circuit, cfg, seed=resolve_seed(seed)
        )
        wall_start = time.perf_counter()
        log = run_loop(
            driver, layout, profile, gains, resolve_sim(), duration,
            initial_state=start_pose(circuit, cfg),
        )
        wall = time.perf_counter() - wall_start
    except TorsoDriveError as exc:
        raise click.ClickException(str(exc))
    log.to_csv(out_path)
    click.echo(f"log written to {out_path} ({len(log)} ticks, {wall:.2f}s wall)")
    if len(log) >= 3:
        m = met.evaluate(log, p_max=profile.p_max)
        click.echo(
            f"metrics: CT={m.completion_time:.2f}s  Jk={m.jerk:.4f}  "
            f"Fl={m.fluency:.4f} ({100 * m.fluency:.2f}%)"
        )
    else:
        click.echo("metrics: not defined (run too short)")
    if driver.lap_times:
        laps_str = " ".join(f"{t:.2f}" for t in driver.lap_times)
        click.echo(f"lap completion times: {laps_str}")
    if driver.done:
        click.echo("circuit completed")
    else:
        click.echo("circuit NOT completed within the budget", err=True)
        sys.exit(1)


@main.command()
@click.argument("log_path", type=click.Path(exists=True))
@click.option("--every", default=15, show_default=True, help="Print every Nth tick.")
@click.option("--speed", default=0.0, show_default=True,
              help="Playback pacing multiplier (0 = as fast as possible).")
def replay(log_path, every, speed):
    """Re-render a trial log to stdout and recompute its metrics."""
    try:
        log = TrialLog.from_csv(log_path)
    except TorsoDriveError as exc:
        raise click.ClickException(str(exc))
    if not len(log):
        raise click.ClickException("empty log")
    prev_t = None
    for i, r in enumerate(log):
        if i % every:
            continue
        if speed > 0 and prev_t is not None:
            time.sleep(max(0.0, (r.t - prev_t) / speed))
        prev_t = r.t
        click.echo(
            f"t={r.t:7.3f}  pose=({r.x:+7.3f},{r.y:+7.3f},{r.theta:+6.3f})  "
            f"cmd=({r.v_cmd:+5.2f},{r.w_cmd:+5.2f})  mode={r.mode}"
        )
    if len(log) >= 3:
        m = met.evaluate(log)
        click.echo(
            f"metrics: CT={m.completion_time:.2f}s  Jk={m.jerk:.4f}  Fl={m.fluency:.4f}"
        )


@main.command()
@click.argument("log_paths", type=click.Path(exists=True), nargs=-1, required=True)
@click.option("--labels", default=None,
              help="Comma-separated condition label per log (repeat to group).")
@click.option("--sessions", default=1, show_default=True)
@click.option("--p-max", default=1.0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), help="Also write the report CSV.")
def metrics(log_paths, labels, sessions, p_max, out_path):
    """Metric report over one or more trial logs (grouped by label)."""
    try:
        logs = [TrialLog.from_csv(p) for p in log_paths]
    except TorsoDriveError as exc:
        raise click.ClickException(str(exc))
    if labels:
        names = [s.strip() for s in labels.split(",")]
        if len(names) != len(logs):
            raise click.ClickException(
                f"{len(names)} labels for {len(logs)} logs; they must match 1:1"
            )
    else:
        names = ["all"] * len(logs)
    groups: dict[str, list[TrialLog]] = {}
    for name, log in zip(names, logs):
        groups.setdefault(name, []).append(log)
    try:
        report = met.report_conditions(groups, sessions=sessions, p_max=p_max)
    except TorsoDriveError as exc:
        raise click.ClickException(str(exc))
    click.echo(report.format_table())
    if out_path:
        report.to_csv(out_path)
        click.echo(f"report written to {out_path}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8787, show_default=True)
@click.option("--layout", "layout_path", type=click.Path(exists=True))
@click.option("--profile", "profile_path", type=click.Path(exists=True))
@click.option("--gains", "gains_path", type=click.Path(exists=True))
@click.option("--dwell", default=5.0, show_default=True, help="Calibration dwell seconds.")
@click.option("--rest", default=5.0, show_default=True, help="Calibration rest seconds.")
@click.option("--watchdog", default=0.25, show_default=True, help="Frame timeout, s.")
@click.option("--time-scale", default=1.0, show_default=True,
              help="Wall-clock pacing multiplier (virtual time semantics unchanged).")
@click.option("--out-log", default="teleop_log.csv", show_default=True,
              help="Trial log flushed on shutdown.")
def serve(host, port, layout_path, profile_path, gains_path, dwell, rest,
          watchdog, time_scale, out_log):
    """Host the teleoperation service (WebSocket + status endpoints)."""
    layout = resolve_layout(layout_path)
    try:
        session = TeleopSession(
            layout,
            resolve_profile(profile_path, layout),
            resolve_gains(gains_path),
            resolve_sim(),
            ServiceConfig(
                watchdog_timeout=watchdog, dwell_seconds=dwell, rest_seconds=rest
            ),
        )
        server = TeleopServer(
            session, host=host, port=port, time_scale=time_scale,
            log_path=out_log, profile_path=profile_path,
        )
    except TorsoDriveError as exc:
        raise click.ClickException(str(exc))

    async def run():
        await server.start()
        click.echo(f"teleop service on http://{host}:{server.port} (ws at /ws)")
        stop = asyncio.Event()
        loop = asyncio.get_running_loop()
        for sig in (signal.SIGINT, signal.SIGTERM):
            try:
                loop.add_signal_handler(sig, stop.set)
            except NotImplementedError:  # platforms without loop signal support
                pass
        try:
            await stop.wait()
        finally:
            await server.stop()  # flush the log, close sockets

    try:
        asyncio.run(run())
    except KeyboardInterrupt:
        pass
    if Path(out_log).exists():
        click.echo(f"log flushed to {out_log}")


if __name__ == "__main__":
    main()
