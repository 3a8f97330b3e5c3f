"""Command-line experiment orchestration.

Four subcommands:

* ``run``: play the configured games for each selected target record,
  writing per-game result tables and per-record transcripts.
* ``compare``: join a traditional and a model-seeded result table into a
  per-record comparison with miss-rate and RMSD footer.
* ``convergence``: repeat the evaluation across an n_eval grid and
  report the spread of the risk estimate per grid point.
* ``dp-audit``: check a private generator's empirical trade-off curve
  against the differential-privacy lower bound.

Every output file starts with one header line carrying a format version,
the config hash, and a timestamp; everything below the header is a
deterministic function of the config and master seed, so reruns are
byte-identical apart from that first line.
"""

import argparse
import os
import sys
from dataclasses import replace
from datetime import datetime, timezone

import numpy as np

from . import attack, corpora, games, generators, risk
from . import config as config_mod
from . import data as data_mod
from .errors import ConfigError, JoinError, PrivGamesError
from .seeds import derive, rng

THREADS_ENV_VAR = "PRIVGAMES_THREADS"

RESULTS_COLUMNS = "record_id,game,n_eval,auc,radius,alpha,beta"
COMPARISON_COLUMNS = "record_id,risk_traditional,risk_model_seeded,delta,abs_delta"
CONVERGENCE_COLUMNS = "record_id,game,n_eval,auc_mean,auc_std,radius"
AUDIT_COLUMNS = "record_id,alpha,beta,bound,flagged"

UNDEFINED_TOKEN = "undefined"


def _timestamp():
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _header(kind, cfg_hash, status="complete"):
    return f"# privgames-{kind} v1 config={cfg_hash} status={status} generated={_timestamp()}"


def _write_file(path, lines):
    # Atomic: land the whole file or none of it.
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def read_result_rows(path):
    """Parse a results file into (config_hash, ordered {record_id: auc})."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("# privgames-results v1 "):
        raise ConfigError(f"{path}: not a version-1 results file")
    cfg_hash = ""
    for token in lines[0].split(" "):
        if token.startswith("config="):
            cfg_hash = token[len("config="):]
    if lines[1] != RESULTS_COLUMNS:
        raise ConfigError(f"{path}: unexpected column header {lines[1]!r}")
    rows = {}
    for line in lines[2:]:
        parts = line.split(",")
        rows[parts[0]] = float(parts[3])
    return cfg_hash, rows


# ----------------------------------------------------------- environment


def load_environment(cfg):
    """Load the corpus and carve out the auxiliary/evaluation/target data."""
    csv_path, side = corpora.resolve_dataset(cfg.dataset)
    sidecar = cfg.schema_sidecar or side
    hints = data_mod.parse_schema_sidecar(sidecar) if sidecar else None
    pool = data_mod.load_csv(csv_path, hints=hints)
    if cfg.aux_size + cfg.eval_size > pool.n:
        raise ConfigError(
            f"data.aux_size + data.eval_size = {cfg.aux_size + cfg.eval_size} "
            f"exceeds the {pool.n} records in {cfg.dataset}"
        )
    d_aux, d_eval = data_mod.split(
        pool, (cfg.aux_size, cfg.eval_size), derive(cfg.master_seed, "split")
    )
    d_target = data_mod.sample_records(
        d_eval, cfg.target_size, derive(cfg.master_seed, "target")
    )
    return pool, d_aux, d_eval, d_target


def select_record_ids(cfg, d_target):
    """Resolve the configured record selection to row indices of the
    target dataset."""
    mode, arg = config_mod.parse_record_selection(cfg.record_selection)
    if mode == "ids":
        for rid in arg:
            if rid < 0 or rid >= d_target.n:
                raise ConfigError(
                    f"records.selection id {rid} outside the target dataset "
                    f"[0, {d_target.n - 1}]"
                )
        return list(arg)
    if arg > d_target.n:
        raise ConfigError(
            f"records.selection asks for {arg} records but the target dataset has {d_target.n}"
        )
    if mode == "first":
        return list(range(arg))
    g = rng(derive(cfg.master_seed, "records"))
    return sorted(int(i) for i in g.choice(d_target.n, size=arg, replace=False))


def build_bank(cfg, schema):
    return attack.make_query_bank(
        schema, cfg.k_values, cfg.queries_per_k, derive(cfg.master_seed, "bank")
    )


def build_adversary(cfg, bank, d_aux, x, seed):
    """Toy generators release a bit; everything else gets the trained
    meta-classifier over the query bank."""
    if cfg.generator_spec.kind == generators.TOY:
        return games.toy_bit_adversary()
    meta = attack.train_attack(
        d_aux,
        x,
        cfg.generator_spec,
        bank,
        n=cfg.target_size,
        n_shadow=cfg.n_shadow,
        seed=seed,
        epochs=cfg.epochs,
        learning_rate=cfg.learning_rate,
        l2=cfg.l2,
    )
    return attack.meta_classifier_adversary(meta, bank, x, n_syn=cfg.syn_size)


def game_config(cfg, kind, rid):
    return games.GameConfig(
        n_eval=cfg.n_eval,
        dataset_size=cfg.target_size,
        generator_spec=cfg.generator_spec,
        master_seed=derive(cfg.master_seed, f"game-{kind}", rid),
        game_kind=kind,
        reference_mode=cfg.reference_mode,
    )


def play_game(cfg, kind, rid, x, d_eval, d_target, adversary, threads):
    gcfg = game_config(cfg, kind, rid)
    if kind == games.TRADITIONAL:
        return games.run_traditional(
            x, d_eval, adversary, gcfg, record_id=str(rid), threads=threads
        )
    return games.run_model_seeded(
        x, d_target, d_eval, adversary, gcfg, record_id=str(rid), threads=threads
    )


# -------------------------------------------------------------------- run


def result_row(cfg, transcript):
    est = risk.roc_auc(transcript)
    pair = risk.empirical_rates(transcript, 0.5)
    radius = risk.hoeffding_radius(est.n_eval // 2, cfg.rho)
    return (
        f"{transcript.record_id},{transcript.game_kind},{est.n_eval},"
        f"{est.auc!r},{radius!r},{pair.alpha!r},{pair.beta!r}"
    )


def cmd_run(cfg, threads=1, log=print):
    """Execute the configured evaluation; returns a process exit code."""
    _, d_aux, d_eval, d_target = load_environment(cfg)
    record_ids = select_record_ids(cfg, d_target)
    bank = build_bank(cfg, d_eval.schema)
    cfg_hash = cfg.config_hash()

    os.makedirs(cfg.out_dir, exist_ok=True)
    transcripts_dir = os.path.join(cfg.out_dir, "transcripts")
    os.makedirs(transcripts_dir, exist_ok=True)

    rows = {kind: [] for kind in cfg.game_kinds}
    status = "complete"
    exit_code = 0
    try:
        for rid in record_ids:
            x = d_target.record(rid)
            adversary = build_adversary(
                cfg, bank, d_aux, x, derive(cfg.master_seed, "attack", rid)
            )
            summary = []
            for kind in cfg.game_kinds:
                transcript = play_game(
                    cfg, kind, rid, x, d_eval, d_target, adversary, threads
                )
                games.save_transcript(
                    transcript,
                    os.path.join(transcripts_dir, f"record{rid}_{kind}.txt"),
                )
                rows[kind].append(result_row(cfg, transcript))
                summary.append(f"{kind} auc={risk.roc_auc(transcript).auc:.3f}")
            log(f"record {rid}: " + ", ".join(summary))
    except PrivGamesError as exc:
        log(f"record evaluation failed: {exc}")
        status = "partial"
        exit_code = 1

    for kind in cfg.game_kinds:
        path = os.path.join(cfg.out_dir, f"results_{kind}.csv")
        _write_file(
            path,
            [_header("results", cfg_hash, status), RESULTS_COLUMNS] + rows[kind],
        )
        log(f"wrote {path}")
    return exit_code


# ---------------------------------------------------------------- compare


def _record_sort_key(rid):
    return (0, int(rid), "") if rid.isdigit() else (1, 0, rid)


def cmd_compare(results_t, results_ms, threshold, out_path, allow_mixed=False, log=print):
    """Join two result tables into the comparison file."""
    hash_t, rows_t = read_result_rows(results_t)
    hash_ms, rows_ms = read_result_rows(results_ms)
    if hash_t != hash_ms and not allow_mixed:
        raise ConfigError(
            f"result files carry different config hashes ({hash_t} vs {hash_ms}); "
            "pass --allow-mixed to compare anyway"
        )
    only_t = sorted(set(rows_t) - set(rows_ms), key=_record_sort_key)
    only_ms = sorted(set(rows_ms) - set(rows_t), key=_record_sort_key)
    if only_t or only_ms:
        raise JoinError(
            "record ids do not match: "
            f"only in {results_t}: {only_t or 'none'}; "
            f"only in {results_ms}: {only_ms or 'none'}"
        )

    ids = sorted(rows_t, key=_record_sort_key)
    pairs = [(rows_t[rid], rows_ms[rid]) for rid in ids]
    lines = [
        _header("comparison", hash_t if hash_t == hash_ms else "mixed"),
        COMPARISON_COLUMNS,
    ]
    for rid, (rt, rms) in zip(ids, pairs):
        delta = rt - rms
        lines.append(f"{rid},{rt!r},{rms!r},{delta!r},{abs(delta)!r}")

    rmsd_value = risk.rmsd(pairs)
    try:
        mr_value = repr(risk.miss_rate(pairs, threshold))
    except PrivGamesError:
        mr_value = UNDEFINED_TOKEN
    lines.append(f"summary,n_records,{len(pairs)}")
    lines.append(f"summary,threshold,{threshold!r}")
    lines.append(f"summary,rmsd,{rmsd_value!r}")
    lines.append(f"summary,miss_rate,{mr_value}")
    abs_deltas = [abs(rt - rms) for rt, rms in pairs]
    summary = risk.summarize_distribution(abs_deltas)
    for q, v in sorted(summary.percentiles.items()):
        lines.append(f"summary,abs_delta_p{q},{v!r}")
    for i, count in enumerate(summary.bin_counts):
        lo = summary.bin_edges[i]
        hi = summary.bin_edges[i + 1]
        lines.append(f"hist,{lo!r},{hi!r},{count}")

    _write_file(out_path, lines)
    log(f"wrote {out_path}")
    return 0


def read_comparison_summary(path):
    """Summary rows of a comparison file as {name: token} (strings)."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("summary,"):
                _, name, value = line.strip().split(",", 2)
                out[name] = value
    return out


# ------------------------------------------------------------ convergence


def convergence_table(cfg, threads=1, adversary_factory=None, log=print):
    """Rows of the convergence study: the spread of the AUC estimate per
    (record, game, n_eval) across repeated evaluations.

    ``adversary_factory(rid, x, d_aux, bank, rep)`` supplies the
    adversary for one repetition; by default toy generators use the
    released bit and everything else retrains the attack per repetition.
    """
    if not cfg.n_eval_grid:
        raise ConfigError("convergence.grid is required for this command")
    if cfg.repetitions < 2:
        raise ConfigError(
            f"convergence.repetitions must be >= 2 (got {cfg.repetitions})"
        )
    _, d_aux, d_eval, d_target = load_environment(cfg)
    record_ids = select_record_ids(cfg, d_target)
    bank = build_bank(cfg, d_eval.schema)

    if adversary_factory is None:

        def adversary_factory(rid, x, d_aux_, bank_, rep):
            return build_adversary(
                cfg, bank_, d_aux_, x, derive(cfg.master_seed, f"conv-attack-{rid}", rep)
            )

    rows = []
    for rid in record_ids:
        x = d_target.record(rid)
        base = derive(cfg.master_seed, "convergence", rid)
        aucs = {}
        for rep in range(cfg.repetitions):
            adversary = adversary_factory(rid, x, d_aux, bank, rep)
            for kind in cfg.game_kinds:
                for n_eval in cfg.n_eval_grid:
                    gcfg = games.GameConfig(
                        n_eval=n_eval,
                        dataset_size=cfg.target_size,
                        generator_spec=cfg.generator_spec,
                        master_seed=derive(derive(base, kind, n_eval), "rep", rep),
                        game_kind=kind,
                        reference_mode=cfg.reference_mode,
                    )
                    if kind == games.TRADITIONAL:
                        t = games.run_traditional(
                            x, d_eval, adversary, gcfg, record_id=str(rid), threads=threads
                        )
                    else:
                        t = games.run_model_seeded(
                            x, d_target, d_eval, adversary, gcfg,
                            record_id=str(rid), threads=threads,
                        )
                    aucs.setdefault((kind, n_eval), []).append(risk.roc_auc(t).auc)
        for kind in cfg.game_kinds:
            for n_eval in cfg.n_eval_grid:
                values = np.array(aucs[(kind, n_eval)])
                radius = risk.hoeffding_radius(n_eval // 2, cfg.rho)
                rows.append(
                    f"{rid},{kind},{n_eval},{float(values.mean())!r},"
                    f"{float(values.std(ddof=1))!r},{radius!r}"
                )
        log(f"record {rid}: convergence grid done")
    return rows


def cmd_convergence(cfg, threads=1, log=print):
    rows = convergence_table(cfg, threads=threads, log=log)
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, "convergence.csv")
    _write_file(
        path,
        [_header("convergence", cfg.config_hash()), CONVERGENCE_COLUMNS] + rows,
    )
    log(f"wrote {path}")
    return 0


# --------------------------------------------------------------- dp-audit


def cmd_dp_audit(cfg, threads=1, log=print):
    """Audit the model-seeded trade-off curve against the DP bound."""
    if cfg.generator_spec.kind != generators.PRIVBAYNET:
        raise ConfigError(
            "generator.kind must be privbaynet for dp-audit "
            f"(got {cfg.generator_spec.kind!r})"
        )
    _, d_aux, d_eval, d_target = load_environment(cfg)
    record_ids = select_record_ids(cfg, d_target)
    bank = build_bank(cfg, d_eval.schema)

    rows = []
    flagged_total = 0
    for rid in record_ids:
        x = d_target.record(rid)
        adversary = build_adversary(
            cfg, bank, d_aux, x, derive(cfg.master_seed, "attack", rid)
        )
        transcript = play_game(
            cfg, games.MODEL_SEEDED, rid, x, d_eval, d_target, adversary, threads
        )
        points = risk.dp_audit_points(
            transcript, cfg.generator_spec.epsilon, delta=0.0, rho=cfg.rho
        )
        for alpha, beta, bound, flagged in points:
            rows.append(f"{rid},{alpha!r},{beta!r},{bound!r},{int(flagged)}")
            flagged_total += int(flagged)
        log(f"record {rid}: {len(points)} trade-off points audited")

    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, "dp_audit.csv")
    _write_file(
        path, [_header("dp-audit", cfg.config_hash()), AUDIT_COLUMNS] + rows
    )
    log(f"wrote {path}")
    log(f"{flagged_total} flagged points")
    return 0


# ------------------------------------------------------------------- main


def _default_threads():
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV_VAR} must be an integer (got {raw!r})")
    if value < 1:
        raise ConfigError(f"{THREADS_ENV_VAR} must be >= 1 (got {value})")
    return value


def _load_config_with_overrides(args):
    cfg = config_mod.load_experiment_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if getattr(args, "out", None):
        cfg = replace(cfg, out_dir=args.out)
    if getattr(args, "records", None):
        config_mod.parse_record_selection(args.records)
        cfg = replace(cfg, record_selection=args.records)
    return cfg


def _add_run_style_options(sub):
    sub.add_argument("--config", required=True, help="experiment config file")
    sub.add_argument("--seed", type=int, help="override experiment.master_seed")
    sub.add_argument("--out", help="override output.dir")
    sub.add_argument(
        "--records", help="override records.selection (ids:... | first:K | random:K)"
    )
    sub.add_argument(
        "--threads",
        type=int,
        help=f"game rounds run in this many threads (default ${THREADS_ENV_VAR} or 1)",
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="privgames",
        description="Per-record membership-inference risk evaluation for "
        "synthetic data generators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="play the configured games per record")
    _add_run_style_options(p_run)

    p_cmp = sub.add_parser("compare", help="join traditional and model-seeded results")
    p_cmp.add_argument("results_traditional")
    p_cmp.add_argument("results_model_seeded")
    p_cmp.add_argument("--threshold", type=float, default=risk.DEFAULT_THRESHOLD)
    p_cmp.add_argument("--out", default="comparison.csv")
    p_cmp.add_argument(
        "--allow-mixed",
        action="store_true",
        help="compare files whose config hashes differ",
    )

    p_conv = sub.add_parser("convergence", help="AUC spread across an n_eval grid")
    _add_run_style_options(p_conv)

    p_audit = sub.add_parser("dp-audit", help="check the DP trade-off lower bound")
    _add_run_style_options(p_audit)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "compare":
            if not 0.0 < args.threshold < 1.0:
                raise ConfigError(
                    f"--threshold must be in (0, 1) (got {args.threshold})"
                )
            return cmd_compare(
                args.results_traditional,
                args.results_model_seeded,
                args.threshold,
                args.out,
                allow_mixed=args.allow_mixed,
            )
        threads = args.threads if args.threads is not None else _default_threads()
        if threads < 1:
            raise ConfigError(f"--threads must be >= 1 (got {threads})")
        cfg = _load_config_with_overrides(args)
        if args.command == "run":
            return cmd_run(cfg, threads=threads)
        if args.command == "convergence":
            return cmd_convergence(cfg, threads=threads)
        if args.command == "dp-audit":
            return cmd_dp_audit(cfg, threads=threads)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, JoinError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PrivGamesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
