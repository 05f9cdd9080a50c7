"""Command-line entry point: ``storagelabels <subcommand> ...``."""

from __future__ import annotations

import argparse
import datetime
import gzip
import io
import json
import logging
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

from . import synthetic
from .breakage import (
    ReplayError,
    ReplayMode,
    blocklist_coverage,
    breakage_report,
    denials_tsv,
    load_blocklist,
    replay,
)
from .classifier import ROUNDING, UndefinedRatioError, classify_log
from .cookies import CookieSyntaxError, parse_set_cookie
from .domains import DomainError, Party, load_suffix_list
from .eventlog import SCHEMA, LogError, ParsedLog, iter_events, parse_event_log

log = logging.getLogger("storagelabels")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


@dataclass
class RunConfig:
    subcommand: str
    input_path: str | None = None
    mode: ReplayMode = ReplayMode.ENFORCE
    party: Party = Party.REGISTRABLE
    suffix_list_path: str | None = None
    blocklist_path: str | None = None
    output_path: str | None = None
    format: str = "tsv"
    top_n: int = 20
    strict: bool = False
    check: bool = False
    stamp: bool = False
    figures: str | None = None
    rounding: str = "half-up"

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> RunConfig:
        top_n = getattr(args, "top_n", 20)
        if top_n < 1:
            raise SystemExit("error: --top-n must be at least 1")
        return cls(
            subcommand=args.command,
            input_path=getattr(args, "log", None),
            mode=ReplayMode(getattr(args, "mode", "enforce")),
            party=Party(args.party),
            suffix_list_path=args.suffix_list,
            blocklist_path=getattr(args, "blocklist", None),
            output_path=args.output,
            format=args.format,
            top_n=top_n,
            strict=getattr(args, "strict", False),
            check=getattr(args, "check", False),
            stamp=args.stamp,
            figures=getattr(args, "figures", None),
            rounding=getattr(args, "rounding", "half-up"),
        )


@contextmanager
def _open_text(path: str):
    if path == "-":
        yield sys.stdin
    elif path.endswith(".gz"):
        with gzip.open(path, "rt", encoding="utf-8") as fh:
            yield fh
    else:
        with open(path, encoding="utf-8") as fh:
            yield fh


def _emit(config: RunConfig, text: str) -> None:
    if config.output_path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(config.output_path).write_text(text, encoding="utf-8")


def _stamp_json(config: RunConfig, doc: dict) -> dict:
    if config.stamp:
        doc = {"generated": datetime.datetime.now(datetime.timezone.utc).isoformat(), **doc}
    return doc


def _stamp_tsv(config: RunConfig, text: str) -> str:
    if config.stamp:
        return f"# generated\t{datetime.datetime.now(datetime.timezone.utc).isoformat()}\n{text}"
    return text


def _dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _load_log(config: RunConfig) -> tuple[ParsedLog, bool]:
    """Parse the input log; the flag says whether the run may continue."""
    suffixes = load_suffix_list(config.suffix_list_path)
    with _open_text(config.input_path) as fh:
        parsed = parse_event_log(fh, suffixes)
    _report_errors(config, parsed.errors)
    return parsed, not (config.strict and parsed.errors)


def _report_errors(config: RunConfig, errors: list[LogError]) -> None:
    for err in errors:
        print(f"{config.input_path}: {err}", file=sys.stderr)
    if errors:
        log.warning("%d malformed line(s) skipped", len(errors))


def _check_summary(config: RunConfig, parsed: ParsedLog) -> int:
    print(f"{config.input_path}: {len(parsed.events)} event(s), {len(parsed.errors)} error(s)", file=sys.stderr)
    return EXIT_OK if parsed.ok else EXIT_FAILED


def cmd_parse_set_cookie(args: argparse.Namespace) -> int:
    try:
        suffixes = load_suffix_list(args.suffix_list)
        origin = suffixes.normalize(args.origin)
        record = parse_set_cookie(args.header, origin, args.now, suffixes)
    except CookieSyntaxError as exc:
        if args.format == "json":
            print(json.dumps({"error": str(exc), "attribute": exc.attribute}), file=sys.stderr)
        else:
            print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except DomainError as exc:
        print(f"parse error: origin: {exc}", file=sys.stderr)
        return EXIT_FAILED
    if args.format == "json":
        doc = {
            "canonical": record.canonical(),
            "name": record.name,
            "value": record.value,
            "domain": record.domain.raw_host,
            "owner": record.owner.raw_host,
            "readers": sorted(d.raw_host for d in record.label.readers),
            "writers": sorted(d.raw_host for d in record.label.writers),
            "secure": record.secure,
            "http_only": record.http_only,
            "same_site": record.same_site.value,
            "expires_at": record.expires_at,
        }
        sys.stdout.write(_dumps(doc))
    else:
        print(record.canonical())
    return EXIT_OK


def cmd_check_log(config: RunConfig, args: argparse.Namespace) -> int:
    if args.schema:
        _emit(config, SCHEMA)
        return EXIT_OK
    if config.input_path is None:
        print("error: check-log needs a log path (or --schema)", file=sys.stderr)
        return EXIT_USAGE
    parsed, _ = _load_log(config)
    return _check_summary(config, parsed)


def cmd_simulate(config: RunConfig) -> int:
    parsed, proceed = _load_log(config)
    if config.check:
        return _check_summary(config, parsed)
    if not proceed:
        return EXIT_FAILED
    try:
        result = replay(parsed.events, config.mode, config.party)
    except ReplayError as exc:
        print(f"replay error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    report = breakage_report(result.denials, config.top_n)
    stores = {
        site: {
            "cookies": [r.canonical() for r in state.jar.records()],
            "storage": state.storage.dump(),
        }
        for site, state in sorted(result.sites.items())
    }
    if config.format == "json":
        doc = {
            "mode": config.mode.value,
            "party": config.party.value,
            "denials": [d.to_json() for d in result.denials],
            "summary": report.to_json(),
            "stores": stores,
        }
        _emit(config, _dumps(_stamp_json(config, doc)))
    else:
        parts = [f"# mode\t{config.mode.value}\n", "# denials\n", denials_tsv(result.denials),
                 "# summary\n", report.to_tsv(), "# cookies\nsite\tcookie\n"]
        parts += [f"{site}\t{c}\n" for site, s in stores.items() for c in s["cookies"]]
        parts.append("# storage\nsite\tkind\thost\tscope\tkey\towner\treaders\twriters\tvalue\n")
        parts += [f"{site}\t{line}\n" for site, s in stores.items() for line in s["storage"]]
        _emit(config, _stamp_tsv(config, "".join(parts)))
    if config.figures and report.top_scripts:
        from .plotting import plot_top_scripts

        out = plot_top_scripts(report, _figure_dir(config) / "top_denied_scripts.png")
        print(f"wrote {out}", file=sys.stderr)
    return EXIT_OK


def cmd_classify(config: RunConfig) -> int:
    if config.check:
        parsed, _ = _load_log(config)
        return _check_summary(config, parsed)
    # streamed: crawl-sized logs need not fit in memory
    errors: list[LogError] = []
    counter = _Counter()
    with _open_text(config.input_path) as fh:
        events = counter.wrap(iter_events(fh, load_suffix_list(config.suffix_list_path), errors))
        report = classify_log(events, config.party, config.rounding)
    _report_errors(config, errors)
    if config.strict and errors:
        return EXIT_FAILED
    if config.format == "json":
        doc = {"party": config.party.value, "events": counter.n, **report.to_json()}
        _emit(config, _dumps(_stamp_json(config, doc)))
    else:
        _emit(config, _stamp_tsv(config, report.to_tsv()))
    if config.figures:
        from .plotting import plot_categories

        out = plot_categories(report, _figure_dir(config) / "categories.png")
        print(f"wrote {out}", file=sys.stderr)
    return EXIT_OK


class _Counter:
    def __init__(self):
        self.n = 0

    def wrap(self, events):
        for event in events:
            self.n += 1
            yield event


def cmd_breakage(config: RunConfig) -> int:
    entries = None
    if config.blocklist_path is not None:
        try:
            entries = load_blocklist(config.blocklist_path)
        except OSError as exc:
            print(f"error: cannot read blocklist: {exc}", file=sys.stderr)
            return EXIT_FAILED
    parsed, proceed = _load_log(config)
    if config.check:
        return _check_summary(config, parsed)
    if not proceed:
        return EXIT_FAILED
    try:
        result = replay(parsed.events, ReplayMode.ENFORCE, config.party)
    except ReplayError as exc:
        print(f"replay error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    report = breakage_report(result.denials, config.top_n)
    if entries is not None:
        try:
            report.coverage = blocklist_coverage(parsed.events, entries, config.party)
        except UndefinedRatioError as exc:
            print(f"warning: blocklist coverage undefined: {exc}", file=sys.stderr)
    if config.format == "json":
        _emit(config, _dumps(_stamp_json(config, report.to_json())))
    else:
        _emit(config, _stamp_tsv(config, report.to_tsv()))
    if config.figures and report.top_scripts:
        from .plotting import plot_top_scripts

        out = plot_top_scripts(report, _figure_dir(config) / "top_denied_scripts.png")
        print(f"wrote {out}", file=sys.stderr)
    return EXIT_OK


def cmd_fixture(config: RunConfig, args: argparse.Namespace) -> int:
    if args.name == "listings":
        lines = (json.dumps(r) for r in synthetic.listings_records())
    elif args.name == "cmp":
        lines = (json.dumps(r) for r in synthetic.cmp_records())
    elif args.name == "table2":
        lines = synthetic.table2_lines()
    else:
        lines = synthetic.throughput_lines(args.events, args.seed)
    target = config.output_path
    if target in (None, "-"):
        for line in lines:
            sys.stdout.write(line + "\n")
        return EXIT_OK
    opener = gzip.open if target.endswith(".gz") else open
    with opener(target, "wt", encoding="utf-8") as fh:
        buf = io.StringIO()
        for i, line in enumerate(lines, 1):
            buf.write(line)
            buf.write("\n")
            if i % 100_000 == 0:
                fh.write(buf.getvalue())
                buf = io.StringIO()
        fh.write(buf.getvalue())
    return EXIT_OK


def _figure_dir(config: RunConfig) -> Path:
    path = Path(config.figures)
    path.mkdir(parents=True, exist_ok=True)
    return path


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--party", choices=[p.value for p in Party], default=Party.REGISTRABLE.value,
                        help="compare scripts by registrable domain (default) or exact host")
    common.add_argument("--suffix-list", metavar="PATH",
                        help="public suffix list file (default: bundled snapshot or $STORAGELABELS_SUFFIX_LIST)")
    common.add_argument("-o", "--output", metavar="PATH", help="write data here instead of stdout")
    common.add_argument("--format", choices=["tsv", "json"], default="tsv")
    common.add_argument("--stamp", action="store_true", help="include a generation timestamp")
    common.add_argument("-v", "--verbose", action="store_true")

    log_opts = argparse.ArgumentParser(add_help=False)
    log_opts.add_argument("log", help="access log (JSON lines; '-' for stdin, .gz accepted)")
    log_opts.add_argument("--strict", action="store_true", help="fail when any log line is malformed")
    log_opts.add_argument("--check", action="store_true", help="only validate the log")
    log_opts.add_argument("--top-n", type=int, default=20)

    parser = argparse.ArgumentParser(prog="storagelabels", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse-set-cookie", parents=[common], help="parse one labeled Set-Cookie header")
    p.add_argument("header")
    p.add_argument("--origin", required=True, help="host or URL that sent the header")
    p.add_argument("--now", type=float, default=0.0, help="current time in seconds (for Max-Age)")

    p = sub.add_parser("simulate", parents=[common, log_opts], help="replay a log in observe or enforce mode")
    p.add_argument("--mode", choices=[m.value for m in ReplayMode], default=ReplayMode.ENFORCE.value)
    p.add_argument("--figures", metavar="DIR", help="also render figures into DIR")

    p = sub.add_parser("classify", parents=[common, log_opts], help="first-/third-party access tables")
    p.add_argument("--rounding", choices=sorted(ROUNDING), default="half-up")
    p.add_argument("--figures", metavar="DIR", help="also render figures into DIR")

    p = sub.add_parser("breakage", parents=[common, log_opts], help="enforce-mode denials and blocklist coverage")
    p.add_argument("--blocklist", metavar="PATH", help="newline-delimited domain list, '#' comments")
    p.add_argument("--figures", metavar="DIR", help="also render figures into DIR")

    p = sub.add_parser("check-log", parents=[common], help="validate a log, or print its schema")
    p.add_argument("log", nargs="?")
    p.add_argument("--schema", action="store_true", help="print the log field reference")

    p = sub.add_parser("fixture", parents=[common], help="write a synthetic log")
    p.add_argument("name", choices=["listings", "cmp", "table2", "throughput"])
    p.add_argument("--events", type=int, default=1_000_000, help="size of the throughput log")
    p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    if args.command == "parse-set-cookie":
        return cmd_parse_set_cookie(args)
    config = RunConfig.from_args(args)
    try:
        if args.command == "check-log":
            return cmd_check_log(config, args)
        if args.command == "fixture":
            return cmd_fixture(config, args)
        handler = {"simulate": cmd_simulate, "classify": cmd_classify, "breakage": cmd_breakage}[args.command]
        return handler(config)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
