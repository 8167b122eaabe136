"""Command-line entry point: build, check coverage, train, report.

stdout carries CSV only; diagnostics go to stderr. Exit codes are the
machine-readable verdict (``check-coverage``: 0 covers, 1 does not cover;
``validate``: 0 clean, 1 violations). Malformed input exits with 2.
"""
from __future__ import annotations

import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import click

from .automata import AutomatonError, dump_aut, enumerate_language
from .coverage import check_coverage, coverage_oracle
from .environment import RewardSpec, load_env, validate_env
from .learner import LearnConfig, train, value_iteration_oracle
from .specs import load_spec

INPUT_ERROR = 2


@dataclass(frozen=True)
class RunManifest:
    env: str
    spec: str | None
    config: LearnConfig
    rewards: RewardSpec
    out: str
    backend: str | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def _fail(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(INPUT_ERROR)


def _read_env(path: str):
    try:
        return load_env(Path(path).read_text(encoding="utf-8"))
    except (AutomatonError, OSError) as exc:
        _fail(f"{path}: {exc}")


def _read_spec(path: str, alphabet):
    try:
        return load_spec(path, alphabet)
    except (AutomatonError, OSError) as exc:
        _fail(f"{path}: {exc}")


env_option = click.option("--env", "env_path", required=True, type=click.Path(exists=True, dir_okay=False),
                          help="Environment (.aut or grid shorthand).")


def reward_options(f):
    f = click.option("--gamma", default=0.95, show_default=True, help="Discount factor.")(f)
    f = click.option("--goal-reward", default=0.0, show_default=True, help="Bonus on entering a goal.")(f)
    f = click.option("--step-reward", default=-1.0, show_default=True, help="Reward per step.")(f)
    return f


@click.group()
def main():
    """Supervised exploration for tabular reinforcement learning."""


@main.command()
@env_option
def validate(env_path):
    """Check the environment assumptions; one violation per line."""
    env = _read_env(env_path)
    violations = validate_env(env)
    click.echo("violation")
    for v in violations:
        click.echo(f'"{v}"')
    sys.exit(1 if violations else 0)


@main.command("compile-spec")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--alphabet", default=None, help="Space-separated action labels.")
@click.option("--env", "env_path", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Take the alphabet from this environment instead.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def compile_spec_cmd(spec_path, alphabet, env_path, out):
    """Compile a .spec file into a specification automaton (.aut)."""
    if (alphabet is None) == (env_path is None):
        _fail("give exactly one of --alphabet or --env")
    labels = alphabet.split() if alphabet else _read_env(env_path).labels
    spec = _read_spec(spec_path, labels)
    Path(out).write_text(dump_aut(spec), encoding="utf-8")
    click.echo("states,transitions")
    click.echo(f"{spec.n_states},{spec.n_transitions}")


@main.command("check-coverage")
@env_option
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--oracle-len", type=int, default=None,
              help="Also run the brute-force oracle up to this string length.")
def check_coverage_cmd(env_path, spec_path, oracle_len):
    """Decide whether the specification preserves optimality."""
    env = _read_env(env_path)
    spec = _read_spec(spec_path, env.labels)
    report = check_coverage(spec, env)
    click.echo(report.to_csv(), nl=False)
    if oracle_len is not None:
        oracle = coverage_oracle(spec, env, oracle_len)
        agree = "agrees" if oracle.verdict == report.verdict else "DISAGREES"
        click.echo(f"oracle (max_len {oracle_len}): {oracle.verdict}, {agree}", err=True)
    click.echo(f"{report.verdict}: {len(report.uncovered)} uncovered pairs", err=True)
    sys.exit(0 if report.covers else 1)


def _train_one(manifest: RunManifest) -> dict:
    env = load_env(Path(manifest.env).read_text(encoding="utf-8"))
    spec = load_spec(manifest.spec, env.labels) if manifest.spec else None
    result = train(env, spec, manifest.config, manifest.rewards, backend=manifest.backend)
    out = Path(manifest.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "q_table.csv").write_text(result.q.to_csv(env.labels), encoding="utf-8")
    (out / "returns.csv").write_text(result.returns_csv(), encoding="utf-8")
    (out / "traces.log").write_text(result.trace_log(), encoding="utf-8")
    (out / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    return {"seed": manifest.config.seed, "backend": result.backend, **result.cause_counts()}


@main.command("train")
@env_option
@click.option("--spec", "spec_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--episodes", default=20_000, show_default=True)
@click.option("--epsilon", default=0.2, show_default=True)
@click.option("--alpha", default=None, type=float, help="Constant learning rate (implies --alpha-schedule constant).")
@click.option("--alpha-schedule", type=click.Choice(["visit-count", "constant"]), default=None)
@reward_options
@click.option("--seed", "seeds", multiple=True, type=int, default=(0,), show_default=True,
              help="Repeat for a seed sweep; each run goes to OUT/seed-N.")
@click.option("--max-steps", default=500, show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--jobs", default=1, show_default=True, help="Parallel processes for seed sweeps.")
@click.option("--backend", type=click.Choice(["python", "cython"]), default=None)
def train_cmd(env_path, spec_path, episodes, epsilon, alpha, alpha_schedule, gamma, goal_reward, step_reward,
              seeds, max_steps, out, jobs, backend):
    """Q-learning run(s); writes q_table.csv, returns.csv, traces.log, manifest.json."""
    env = _read_env(env_path)
    for v in validate_env(env):
        click.echo(f"warning: {v}", err=True)
    if spec_path:
        _read_spec(spec_path, env.labels)
    schedule = alpha_schedule or ("constant" if alpha is not None else "visit-count")
    try:
        rewards = RewardSpec(step_reward, goal_reward, gamma)
        configs = [
            LearnConfig(episodes, max_steps, epsilon, schedule, alpha if alpha is not None else 0.1, seed)
            for seed in seeds
        ]
    except ValueError as exc:
        _fail(str(exc))
    outs = [Path(out)] if len(seeds) == 1 else [Path(out) / f"seed-{s}" for s in seeds]
    manifests = [
        RunManifest(str(Path(env_path)), str(Path(spec_path)) if spec_path else None, cfg, rewards, str(o), backend)
        for cfg, o in zip(configs, outs)
    ]
    if jobs > 1 and len(manifests) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            summaries = list(pool.map(_train_one, manifests))
    else:
        summaries = [_train_one(m) for m in manifests]
    click.echo("seed,backend,goal,deadlock,step_cap")
    for s in summaries:
        click.echo(f"{s['seed']},{s['backend']},{s['goal']},{s['deadlock']},{s['step-cap']}")


@main.command("oracle")
@env_option
@reward_options
@click.option("--out", default=None, type=click.Path(dir_okay=False), help="Write here instead of stdout.")
def oracle_cmd(env_path, gamma, goal_reward, step_reward, out):
    """Exact Q* by value iteration, as q_table CSV."""
    env = _read_env(env_path)
    try:
        q = value_iteration_oracle(env, RewardSpec(step_reward, goal_reward, gamma))
    except (ValueError, RuntimeError) as exc:
        _fail(str(exc))
    text = q.to_csv(env.labels)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


@main.command("enumerate")
@click.option("--aut", "aut_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--max-len", required=True, type=click.IntRange(min=0))
def enumerate_cmd(aut_path, max_len):
    """Dump the generated language up to a length bound."""
    try:
        aut = load_env(Path(aut_path).read_text(encoding="utf-8"))
        language = enumerate_language(aut, max_len)
    except (AutomatonError, OSError) as exc:
        _fail(f"{aut_path}: {exc}")
    except RuntimeError as exc:
        _fail(str(exc))
    click.echo("string,marked")
    for string in sorted(language.strings, key=lambda s: (len(s), s)):
        click.echo(f"{' '.join(string)},{int(string in language.marked)}")


if __name__ == "__main__":
    main()
