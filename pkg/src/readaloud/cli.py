"""Command-line tool: serve the API, manage banks, simulate, import, report.

Exit codes: 0 success, 1 domain failure (bad data, failed validation),
2 usage error (bad flags/arguments).
"""

from __future__ import annotations

import json
from pathlib import Path

import click

from . import __version__
from .assessment import (
    PupilProfile,
    SessionConfig,
    attempt_from_payload,
    generate_flags,
    record_attempt,
)
from .audio import read_wav, synth_utterance
from .errors import ReadAloudError
from .item_bank import default_bank, load_bank_file
from .recognizer import build_template
from .records import EventStore, import_legacy, remark_event_bodies
from .simulate import SimulationSpec, render_report, run_simulation

CONFIG_ENV_VAR = "READALOUD_CONFIG"


class _Fail(click.ClickException):
    """Domain failure: message to stderr, exit code 1."""

    exit_code = 1


@click.group()
@click.version_option(version=__version__, prog_name="readaloud")
def main():
    """Phonics reading practice: game service, banks, simulation, records."""


@main.command()
@click.option(
    "--config",
    "config_path",
    envvar=CONFIG_ENV_VAR,
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Service config JSON (or set READALOUD_CONFIG).",
)
def serve(config_path):
    """Run the HTTP service until interrupted."""
    import os

    import uvicorn

    from .service import create_app, load_service_config

    try:
        config = load_service_config(config_path)
        app = create_app(config)
    except ReadAloudError as exc:
        raise _Fail(str(exc)) from exc
    port = int(os.environ.get("READALOUD_PORT", config.port))
    uvicorn.run(app, host=config.host, port=port, log_level="info")


@main.group()
def bank():
    """Inspect and prepare item banks."""


@bank.command("validate")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
def bank_validate(path):
    """Check a bank file; exit 0 when clean, 1 with findings otherwise."""
    try:
        loaded = load_bank_file(path)
    except ReadAloudError as exc:
        raise _Fail(f"invalid bank: {exc}") from exc
    click.echo(f"ok: {len(loaded.items)} items across bands {loaded.bands[0]}..{loaded.bands[-1]}")


@bank.command("build-templates")
@click.argument("bank_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option(
    "--from-audio",
    "audio_dir",
    type=click.Path(exists=True, file_okay=False),
    help="Directory of <item_id>.wav recordings; default is synthesized audio.",
)
@click.option("--seed", default=1234, show_default=True, help="Seed for synthesized templates.")
def bank_build_templates(bank_path, out_dir, audio_dir, seed):
    """Write one feature-template JSON per bank item into --out."""
    try:
        loaded = load_bank_file(bank_path)
    except ReadAloudError as exc:
        raise _Fail(f"invalid bank: {exc}") from exc
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    built = 0
    for item in loaded.items:
        try:
            if audio_dir is not None:
                wav_path = Path(audio_dir) / f"{item.item_id}.wav"
                if not wav_path.exists():
                    raise _Fail(f"no recording for item {item.item_id!r}: {wav_path}")
                clip = read_wav(wav_path)
            else:
                clip = synth_utterance(item.item_id, seed=seed)
            template = build_template(item.item_id, clip)
        except ReadAloudError as exc:
            raise _Fail(f"item {item.item_id!r}: {exc}") from exc
        payload = template.features.to_payload()
        (out / f"{item.item_id}.json").write_text(
            json.dumps(payload, sort_keys=True), encoding="utf-8"
        )
        built += 1
    click.echo(f"built {built} templates in {out}")


@main.command()
@click.option("--pupils", default=30, show_default=True, help="Cohort size.")
@click.option("--seed", default=0, show_default=True, help="Simulation seed.")
@click.option("--sessions", default=4, show_default=True, help="Sessions per pupil.")
@click.option("--items", default=9, show_default=True, help="Items per session.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), help="Write report here instead of stdout.")
@click.option("--store", "store_path", type=click.Path(dir_okay=False), help="Also persist events to this store.")
@click.option("--bank", "bank_path", type=click.Path(exists=True, dir_okay=False), help="Bank file (default: built-in).")
@click.option("--via-http", is_flag=True, help="Additionally smoke-test the HTTP service with the same bank.")
def simulate(pupils, seed, sessions, items, out_path, store_path, bank_path, via_http):
    """Run a whole simulated class through sessions and print the report."""
    if pupils < 1:
        raise click.UsageError("--pupils must be >= 1")
    if sessions < 1 or items < 1:
        raise click.UsageError("--sessions and --items must be >= 1")
    loaded = load_bank_file(bank_path) if bank_path else default_bank()
    try:
        spec = SimulationSpec(
            pupil_count=pupils, items_per_session=items, sessions_per_pupil=sessions, seed=seed
        )
        store = EventStore(store_path) if store_path else None
        result = run_simulation(spec, bank=loaded, store=store)
    except ReadAloudError as exc:
        raise _Fail(str(exc)) from exc
    report = render_report(result, bank=loaded)
    if out_path:
        Path(out_path).write_text(report, encoding="utf-8")
        click.echo(f"wrote report to {out_path}")
    else:
        click.echo(report, nl=False)
    if via_http:
        _http_smoke(loaded, seed)
        click.echo("http smoke: ok", err=True)


def _http_smoke(loaded_bank, seed):
    """Boot the service on a loopback port and drive one round-trip request set."""
    import socket
    import tempfile
    import threading
    import urllib.request

    import uvicorn

    from .item_bank import dump_bank_text
    from .service import ServiceConfig, TokenEntry, PupilEntry, create_app

    with tempfile.TemporaryDirectory() as tmp:
        bank_file = Path(tmp) / "bank.csv"
        bank_file.write_text(dump_bank_text(loaded_bank), encoding="utf-8")
        config = ServiceConfig(
            store_path=str(Path(tmp) / "store.events"),
            tokens=(TokenEntry(token="smoke-helper", role="helper", name="smoke"),),
            pupils=(PupilEntry(pupil_id="smoke-pupil", ability_band=1),),
            bank_path=str(bank_file),
            template_seed=seed + 7919,
        )
        app = create_app(config)
        with socket.socket() as probe:
            probe.bind(("127.0.0.1", 0))
            port = probe.getsockname()[1]
        server = uvicorn.Server(
            uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
        )
        thread = threading.Thread(target=server.run, daemon=True)
        thread.start()
        try:
            deadline = 50
            while not server.started and deadline > 0:
                threading.Event().wait(0.1)
                deadline -= 1
            if not server.started:
                raise _Fail("http smoke: service did not start")
            base = f"http://127.0.0.1:{port}"
            with urllib.request.urlopen(f"{base}/healthz", timeout=5) as resp:
                if resp.status != 200:
                    raise _Fail(f"http smoke: healthz returned {resp.status}")
            body = json.dumps({"pupil_id": "smoke-pupil", "helper_token": "smoke-helper"}).encode()
            req = urllib.request.Request(
                f"{base}/api/v1/sessions", data=body, headers={"Content-Type": "application/json"}
            )
            with urllib.request.urlopen(req, timeout=5) as resp:
                created = json.loads(resp.read())
            if resp.status != 201 or not created.get("items"):
                raise _Fail("http smoke: session create failed")
        finally:
            server.should_exit = True
            thread.join(timeout=5)


def _profile_from_store(store: EventStore, pupil_id: str, config: SessionConfig) -> PupilProfile:
    profile = PupilProfile(pupil_id=pupil_id)
    for ev in store.query(pupil_id, kinds=["AttemptLogged"]):
        profile = record_attempt(profile, attempt_from_payload(ev.payload), config)
    return profile


@main.command()
@click.option("--pupil", "pupil_id", required=True, help="Pupil id to report on.")
@click.option("--store", "store_path", required=True, type=click.Path(exists=True, dir_okay=False))
def report(pupil_id, store_path):
    """Print a pupil's profile, current flags, and last-session summary."""
    try:
        store = EventStore(store_path)
        events = store.query(pupil_id)
    except ReadAloudError as exc:
        raise _Fail(str(exc)) from exc
    if not events:
        raise _Fail(f"no events for pupil {pupil_id!r} in {store_path}")
    config = SessionConfig()
    profile = _profile_from_store(store, pupil_id, config)

    click.echo("[profile]")
    click.echo(f"pupil_id\t{pupil_id}")
    click.echo(f"items_attempted\t{len(profile.attempts)}")
    total = sum(profile.attempts.values())
    click.echo(f"total_attempts\t{total}")
    for item_id in sorted(profile.proficiency):
        click.echo(
            f"{item_id}\t{profile.proficiency[item_id]:.4f}\t{profile.attempts[item_id]}"
        )
    click.echo("")
    click.echo("[flags]")
    last_at = max(ev.at for ev in events)
    for flag in generate_flags(profile, config, now=last_at):
        click.echo(f"{flag.priority_rank}\t{flag.item_id}\t{flag.proficiency:.4f}\t{flag.attempts}")
    click.echo("")
    click.echo("[last-session]")
    sessions = store.query(pupil_id, kinds=["SessionCompleted"])
    if sessions:
        payload = sessions[-1].payload
        n_attempts = len(payload.get("attempts", ()))
        n_correct = sum(1 for a in payload.get("attempts", ()) if a.get("correct"))
        click.echo(f"session_id\t{payload.get('session_id')}")
        click.echo(f"attempts\t{n_attempts}")
        click.echo(f"correct\t{n_correct}")
        click.echo(f"final_score\t{payload.get('final_score')}")
    else:
        click.echo("none")


@main.command("import-legacy")
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--pupil", "pupil_id", required=True, help="Pupil the rows belong to.")
@click.option("--store", "store_path", required=True, type=click.Path(dir_okay=False))
@click.option("--default-year", type=int, default=None, help="Year for rows like '19/6'.")
@click.option("--author", default="import", show_default=True, help="Author id for the events.")
@click.option("--strict", is_flag=True, help="Append nothing unless every row parses.")
def import_legacy_cmd(csv_path, pupil_id, store_path, default_year, author, strict):
    """Import a scanned reading-record table as RemarkAdded events."""
    text = Path(csv_path).read_text(encoding="utf-8")
    try:
        parsed = import_legacy(text, default_year=default_year)
    except ReadAloudError as exc:
        raise _Fail(str(exc)) from exc
    for row_no, remark in parsed.remarks:
        marker = " (year inferred)" if remark.year_inferred else ""
        click.echo(f"row {row_no}: ok {remark.date.isoformat()} {remark.material!r}{marker}")
    for row_no, message in parsed.errors:
        click.echo(f"row {row_no}: error {message}", err=True)
    if strict and parsed.errors:
        raise _Fail(f"strict mode: {len(parsed.errors)} row(s) failed, nothing imported")
    appended = 0
    if parsed.remarks:
        store = EventStore(store_path)
        at = max((ev.at for ev in store.events()), default=0.0)
        bodies = remark_event_bodies(parsed, pupil_id=pupil_id, author=author, at=at)
        store.append_many(bodies)
        appended = len(bodies)
    click.echo(f"imported {appended} remark(s), {len(parsed.errors)} error(s)")
    if parsed.errors:
        raise _Fail("some rows failed to parse (see above)")


if __name__ == "__main__":
    main()
