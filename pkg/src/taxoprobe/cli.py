"""Command-line entry point: score, vote, rank, degrade, mask, probe, cache.

Exit codes: 0 success, 1 input error (parsing, validation, bad files),
2 backend/transport error.  All randomness flows from --seed; reports echo
the effective configuration and content hashes of the template and policy
files, so identical configurations yield byte-identical outputs.
"""

from __future__ import annotations

import functools
import logging
import os
import sys

import click

from taxoprobe import backends as be
from taxoprobe import masking as mk
from taxoprobe import noise as ns
from taxoprobe import report as rp
from taxoprobe import scoring as sc
from taxoprobe.errors import BackendError, InputError, TaxoprobeError
from taxoprobe.matching import default_policy, load_policy, rank_of
from taxoprobe.prompts import default_templates, load_templates, query_pool
from taxoprobe.taxonomy import parse_taxonomy_file

logger = logging.getLogger(__name__)


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except BackendError as exc:
            _fail(2, str(exc))
        except (InputError, TaxoprobeError) as exc:
            _fail(1, str(exc))
        except OSError as exc:
            _fail(1, str(exc))

    return wrapper


def backend_options(fn):
    fn = click.option(
        "--cache", "cache_path", default=None, help="Wrap the backend in a JSONL cache file."
    )(fn)
    fn = click.option("--mask-token", default="[MASK]", show_default=True)(fn)
    fn = click.option("--model-id", default=None, help="Model identifier (defaults per kind).")(fn)
    fn = click.option(
        "--http-url",
        envvar="TAXOPROBE_HTTP_URL",
        default=None,
        help="HTTP backend base URL (env TAXOPROBE_HTTP_URL).",
    )(fn)
    fn = click.option(
        "--fixture", "fixture_path", default=None, help="Fixture JSON for the fixture backend."
    )(fn)
    fn = click.option(
        "--backend",
        "backend_kind",
        type=click.Choice(["fixture", "http", "local"]),
        default="fixture",
        show_default=True,
    )(fn)
    return fn


def scoring_options(fn):
    fn = click.option("--seed", default=0, show_default=True, type=int)(fn)
    fn = click.option("--parallelism", default=1, show_default=True, type=int)(fn)
    fn = click.option(
        "--trailing-period/--no-trailing-period",
        default=False,
        help="Append ' .' to rendered prompts.",
    )(fn)
    fn = click.option(
        "--edit-distance-one",
        "edit_distance_one",
        is_flag=True,
        help="Ablation: also count predictions within edit distance 1 of the parent.",
    )(fn)
    fn = click.option(
        "--match-policy", "policy_path", default=None, help="Match policy JSON file."
    )(fn)
    fn = click.option(
        "--templates", "templates_path", default=None, help="Template TSV (id<TAB>pattern)."
    )(fn)
    fn = click.option("-k", "--top-k", "k", default=10, show_default=True, type=int)(fn)
    return fn


def build_backend(backend_kind, fixture_path, http_url, model_id, mask_token, cache_path):
    if backend_kind == "fixture":
        if not fixture_path:
            raise InputError("the fixture backend needs --fixture PATH")
        backend = be.FixtureBackend.from_file(
            fixture_path, model_id=model_id or "fixture", mask_token=mask_token
        )
    elif backend_kind == "http":
        if not http_url:
            raise InputError("the http backend needs --http-url or TAXOPROBE_HTTP_URL")
        if not model_id:
            raise InputError("the http backend needs --model-id")
        backend = be.HttpBackend(http_url, model_id, mask_token=mask_token)
    else:
        if not model_id:
            raise InputError("the local backend needs --model-id")
        backend = be.LocalBackend(model_id)
    if cache_path:
        backend = be.cached(backend, cache_path)
    return backend


def _load_templates(templates_path):
    return load_templates(templates_path) if templates_path else default_templates()


def _load_policy(policy_path, edit_distance_one=False):
    if policy_path:
        return load_policy(policy_path, edit_distance_one=edit_distance_one)
    return default_policy(edit_distance_one=edit_distance_one)


def _config_echo(backend, templates, policy, k, trailing_period, seed):
    return {
        "backend": backend.descriptor.kind,
        "model_id": backend.model_id,
        "mask_token": backend.mask_token,
        "k": k,
        "trailing_period": trailing_period,
        "seed": seed,
        "templates": [t.template_id for t in templates],
        "templates_hash": rp.templates_hash(templates),
        "policy_hash": rp.policy_hash(policy),
    }


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose):
    """Label-free taxonomy evaluation via masked-language-model prompting."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command()
@click.argument("taxonomy_file")
@click.option("--format", "fmt", type=click.Choice(["auto", "edges", "tree"]), default="auto")
@click.option("-o", "--output", default=None, help="Report path (default: <stem>.report.json).")
@click.option("--keep-going", is_flag=True, help="Count errored edges negative instead of aborting.")
@scoring_options
@backend_options
@handle_errors
def score(
    taxonomy_file, fmt, output, keep_going,
    k, templates_path, policy_path, edit_distance_one, trailing_period, parallelism, seed,
    backend_kind, fixture_path, http_url, model_id, mask_token, cache_path,
):
    """Score a taxonomy: fraction of edges whose parent is recalled in top-k."""
    taxonomy = parse_taxonomy_file(taxonomy_file, fmt=fmt)
    backend = build_backend(backend_kind, fixture_path, http_url, model_id, mask_token, cache_path)
    templates = _load_templates(templates_path)
    policy = _load_policy(policy_path, edit_distance_one)
    result = sc.score_taxonomy(
        taxonomy, backend, templates, k, policy,
        parallelism=parallelism, keep_going=keep_going, trailing_period=trailing_period,
    )
    config = _config_echo(backend, templates, policy, k, trailing_period, seed)
    if output is None:
        stem = os.path.splitext(os.path.basename(taxonomy_file))[0]
        output = f"{stem}.report.json"
    rp.write_report(output, result, config)
    score_ = result.score
    click.echo(f"{score_.score:.3f} ({score_.n_positive}/{score_.n_edges})")


@main.command()
@click.argument("report_files", nargs=-1, required=True)
@click.option("--threshold", default=None, type=int, help="Votes needed (default: majority).")
@click.option("-o", "--output", default=None, help="Voted report path.")
@handle_errors
def vote(report_files, threshold, output):
    """Majority-vote per-model reports; ranks taxonomies when several are given."""
    groups: dict[str, dict[str, sc.TaxonomyResult]] = {}
    for path in report_files:
        result = rp.load_report(path)
        per_model = groups.setdefault(result.score.taxonomy_name, {})
        model_id = result.score.model_id
        if model_id in per_model:
            raise InputError(
                f"duplicate report for taxonomy {result.score.taxonomy_name!r} "
                f"and model {model_id!r}"
            )
        per_model[model_id] = result

    payloads = []
    voted_scores = []
    for name in sorted(groups):
        per_model = groups[name]
        verdicts = {m: r.verdicts for m, r in per_model.items()}
        total = len(verdicts)
        thr = sc.default_vote_threshold(total) if threshold is None else threshold
        score_, votes = sc.majority_vote(verdicts, thr, taxonomy_name=name)
        voted_scores.append(score_)
        payloads.append(rp.vote_payload(score_, votes, sorted(per_model), thr))
        click.echo(
            f"{name}: {score_.score:.3f} ({score_.n_positive}/{score_.n_edges}) "
            f"[threshold {thr} of {total}]"
        )
    ranking = None
    if len(voted_scores) > 1:
        ranking = sc.rank_taxonomies(voted_scores)
        for position, s in enumerate(ranking, start=1):
            click.echo(f"{position}. {s.taxonomy_name} {s.score:.3f}")
    if output:
        rp.write_vote_report(output, payloads, ranking)


def _scores_from_report_file(path):
    import json

    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if "taxonomies" in data:  # voted report
        return [
            sc.RelationAccuracy(t["taxonomy"], t["model_id"], t["n_edges"], t["n_positive"])
            for t in data["taxonomies"]
        ]
    result = rp.load_report(path)
    return [result.score]


@main.command()
@click.argument("report_files", nargs=-1, required=True)
@handle_errors
def rank(report_files):
    """Rank taxonomies by score from score or voted report files."""
    scores = []
    seen = set()
    for path in report_files:
        for s in _scores_from_report_file(path):
            if s.taxonomy_name in seen:
                raise InputError(f"taxonomy {s.taxonomy_name!r} appears in several reports")
            seen.add(s.taxonomy_name)
            scores.append(s)
    for position, s in enumerate(sc.rank_taxonomies(scores), start=1):
        click.echo(f"{position}. {s.taxonomy_name} {s.score:.3f} ({s.model_id})")


@main.command()
@click.argument("taxonomy_file")
@click.option("--levels", default="0,0.25,0.5,0.75,1.0", show_default=True)
@click.option("--repeats", default=10, show_default=True, type=int)
@click.option("--csv", "csv_path", default=None, help="Curve CSV path (default: <stem>.noise.csv).")
@click.option("--plot", "plot_path", default=None, help="Optional plot image path.")
@click.option(
    "--replace-target",
    type=click.Choice([ns.REPLACE_CHILD_ONLY, ns.REPLACE_ANY_NODE]),
    default=ns.REPLACE_CHILD_ONLY,
    show_default=True,
)
@click.option("--noise-pool", default=None, help="External replacement vocabulary file.")
@click.option("--format", "fmt", type=click.Choice(["auto", "edges", "tree"]), default="auto")
@scoring_options
@backend_options
@handle_errors
def degrade(
    taxonomy_file, levels, repeats, csv_path, plot_path, replace_target, noise_pool, fmt,
    k, templates_path, policy_path, edit_distance_one, trailing_period, parallelism, seed,
    backend_kind, fixture_path, http_url, model_id, mask_token, cache_path,
):
    """Degrade a taxonomy at increasing noise levels and score each level."""
    taxonomy = parse_taxonomy_file(taxonomy_file, fmt=fmt)
    backend = build_backend(backend_kind, fixture_path, http_url, model_id, mask_token, cache_path)
    templates = _load_templates(templates_path)
    policy = _load_policy(policy_path, edit_distance_one)
    try:
        level_values = tuple(float(x) for x in levels.split(",") if x.strip())
    except ValueError as exc:
        raise InputError(f"bad --levels value: {exc}") from exc
    pool = None
    if noise_pool:
        pool = tuple(sorted(mk.load_term_file(noise_pool)))
    spec = ns.NoiseSpec(level_values, seed=seed, pool=pool, replace_target=replace_target)
    points = ns.sweep(
        taxonomy, spec, backend, templates, k, policy,
        repeats=repeats, parallelism=parallelism,
    )
    if csv_path is None:
        stem = os.path.splitext(os.path.basename(taxonomy_file))[0]
        csv_path = f"{stem}.noise.csv"
    ns.write_sweep_csv(csv_path, points)
    for point in points:
        click.echo(f"level {point.level:.2f}: mean {point.mean:.3f} std {point.std:.3f}")
    if plot_path:
        ns.plot_sweep(plot_path, points, title=taxonomy.name)


@main.command()
@click.argument("corpus_file")
@click.option("--main-topics", default=None, help="Main topic / parent term file.")
@click.option("--other-terms", default=None, help="Other taxonomy term file (e.g. leaves).")
@click.option("--autophrase", default=None, help="Mined phrase list file.")
@click.option(
    "--masking-policy",
    type=click.Choice(list(mk.MASKING_POLICIES)),
    default="entity15",
    show_default=True,
)
@click.option("--fraction", default=1.0, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--budget", default=mk.DEFAULT_BUDGET, show_default=True, type=float)
@click.option(
    "--single-occurrence",
    is_flag=True,
    help="entity_one: mask one occurrence instead of all.",
)
@click.option("--mask-token", default=mk.DEFAULT_MASK_TOKEN, show_default=True)
@click.option("-o", "--output", default=None, help="Dataset path (default: <stem>.dataset.jsonl).")
@click.option("--base-vocab", default=None, help="Base tokenizer vocabulary (token per line).")
@click.option(
    "--new-tokens-out",
    default=None,
    help="Where to write missing parent lemmas (needs --base-vocab).",
)
@handle_errors
def mask(
    corpus_file, main_topics, other_terms, autophrase, masking_policy, fraction, seed,
    budget, single_occurrence, mask_token, output, base_vocab, new_tokens_out,
):
    """Build a masked fine-tuning dataset and the extended-vocabulary token list."""
    inventory = mk.EntityInventory(
        main_topics=mk.load_term_file(main_topics) if main_topics else frozenset(),
        other_terms=mk.load_term_file(other_terms) if other_terms else frozenset(),
        autophrase_terms=mk.load_term_file(autophrase) if autophrase else frozenset(),
    )
    if output is None:
        stem = os.path.splitext(os.path.basename(corpus_file))[0]
        output = f"{stem}.dataset.jsonl"
    stats = mk.build_dataset(
        corpus_file, inventory, masking_policy, output,
        fraction=fraction, seed=seed, budget=budget,
        all_occurrences=not single_occurrence, mask_token=mask_token,
    )
    click.echo(
        f"lines {stats.lines_total} sampled {stats.lines_sampled} "
        f"examples {stats.examples_written} skipped {stats.lines_skipped}"
    )
    for cls in (mk.CLASS_MAIN, mk.CLASS_OTHER, mk.CLASS_AUTOPHRASE, mk.CLASS_RANDOM):
        if stats.class_counts.get(cls):
            click.echo(f"masked[{cls}] {stats.class_counts[cls]}")
    if stats.examples_written == 0:
        click.echo("warning: empty dataset", err=True)
    if new_tokens_out and not base_vocab:
        raise InputError("--new-tokens-out needs --base-vocab")
    if base_vocab:
        tokens = mk.missing_vocab(inventory.main_topics, base_vocab)
        if new_tokens_out is None:
            new_tokens_out = f"{os.path.splitext(output)[0]}.new_tokens.txt"
        with open(new_tokens_out, "w", encoding="utf-8") as fh:
            fh.writelines(f"{tok}\n" for tok in tokens)
        click.echo(f"new tokens {len(tokens)} -> {new_tokens_out}")


@main.command()
@click.argument("child")
@click.argument("parent")
@click.option("--max-rank", default=10000, show_default=True, type=int)
@click.option("--show-top", default=5, show_default=True, type=int)
@scoring_options
@backend_options
@handle_errors
def probe(
    child, parent, max_rank, show_top,
    k, templates_path, policy_path, edit_distance_one, trailing_period, parallelism, seed,
    backend_kind, fixture_path, http_url, model_id, mask_token, cache_path,
):
    """Per-template rank table for one (child, parent) pair."""
    backend = build_backend(backend_kind, fixture_path, http_url, model_id, mask_token, cache_path)
    templates = _load_templates(templates_path)
    policy = _load_policy(policy_path, edit_distance_one)
    positives = []
    for query in query_pool(child, templates, backend.mask_token, trailing_period):
        predictions = backend.fill_mask(query, top_k=max_rank)
        rank_ = rank_of(parent, predictions, policy)
        top = ", ".join(p.token for p in predictions.items[:show_top])
        rank_text = str(rank_) if rank_ is not None else "N/A"
        if rank_ is not None and rank_ <= k:
            positives.append(query.template_id)
        click.echo(f"{query.template_id:<6} rank {rank_text:>6}  top: {top}")
    verdict = f"positive via {', '.join(positives)}" if positives else "negative"
    click.echo(f"k={k}: {verdict}")


@main.group()
def cache():
    """Inspect or compact prediction cache files."""


@cache.command("inspect")
@click.argument("cache_file")
@handle_errors
def cache_inspect(cache_file):
    summary = be.cache_summary(cache_file)
    if not summary:
        click.echo("empty cache")
        return
    for model in sorted(summary):
        info = summary[model]
        click.echo(f"{model}: {info['entries']} prompts, deepest k {info['max_k']}")


@cache.command("compact")
@click.argument("cache_file")
@handle_errors
def cache_compact(cache_file):
    kept = be.compact_cache(cache_file)
    click.echo(f"kept {kept} records")


if __name__ == "__main__":
    main()
