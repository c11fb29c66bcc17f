"""Command-line front end: one scenario per run, one JSON report on stdout.

Exit codes: 0 holds / nothing found, 1 violated / witness found, 2 inconclusive, 3 input error.

    python cli.py check-inf --preset remark
    python cli.py jensen --function builtin:square --domain '{"shape": "interval", "a": -1, "b": 1}' \
        --distribution '{"atoms": [{"point": -1, "probability": 0.5}, {"point": 1, "probability": 0.5}]}'
    python cli.py remark --mu-ratio 0.5
"""
import argparse
import json
import logging
import math
import os
import sys
from typing import Optional, Tuple

from dotenv import load_dotenv
from pydantic import ValidationError

from checkers import (HOLDS, INCONCLUSIVE, VIOLATED, check_infinite_combination, check_jensen_discrete,
                      check_t_convexity, check_ts_convexity, combination_sides, jensen_suite, pavic_bracket,
                      reduction_to_ts)
from core import (ConvexityError, ConvexityParams, EvaluationError, FiniteSupportSequence, GeometricWeights,
                  Interval, PreconditionError, real_line)
from expansion import InfeasibleExpansion, combination_pushforward, complement_identity_check, lambda_expand
from funcparse import builtin
from reports import dumps
from scenarios import Scenario, load_preset, scenario_schema
from search import exp_condition, find_counterexample, remark_gap
from series import weighted_point_series

load_dotenv()

logger = logging.getLogger(__name__)

EXIT_HOLDS = 0
EXIT_VIOLATED = 1
EXIT_INCONCLUSIVE = 2
EXIT_INPUT_ERROR = 3

STATUS_EXIT = {HOLDS: EXIT_HOLDS, VIOLATED: EXIT_VIOLATED, INCONCLUSIVE: EXIT_INCONCLUSIVE}

SUBCOMMANDS = ('check-t', 'check-ts', 'jensen', 'check-inf', 'bracket', 'expand', 'hunt', 'remark', 'schema')


# ── Scenario assembly ───────────────────────────────────────────────────

def _json_flag(name: str, text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise PreconditionError(f"--{name} is not valid JSON: {e.msg}") from e


def build_scenario(args: argparse.Namespace) -> Scenario:
    """Preset or scenario file first, then individual flags on top."""
    if args.scenario:
        with open(args.scenario, encoding='utf-8') as fh:
            data = _json_flag('scenario', fh.read())
    elif args.preset:
        data = load_preset(args.preset).model_dump(by_alias=True, exclude_none=True)
    else:
        data = {}
    if not isinstance(data, dict):
        raise PreconditionError("a scenario must be a JSON object")

    for flag, key in (('function', 'function'), ('lower_bound', 'lower_bound')):
        value = getattr(args, flag)
        if value is not None:
            data[key] = value
    for flag, key in (('domain', 'domain'), ('lambda_', 'lambda'), ('mu', 'mu'), ('sequence', 'sequence'),
                      ('distribution', 'distribution')):
        value = getattr(args, flag)
        if value is not None:
            data[key] = _json_flag(key, value)
    if args.lambda_ratio is not None:
        data['lambda'] = {'kind': 'geometric', 'ratio': args.lambda_ratio}
    if args.mu_ratio is not None:
        data['mu'] = {'kind': 'geometric', 'ratio': args.mu_ratio}

    params = dict(data.get('params', {}))
    for flag in ('t', 's', 'depth', 'tol', 'seed', 'budget', 'samples', 'denominator_bound', 'support', 'a', 'b'):
        value = getattr(args, flag)
        if value is not None:
            params['support_size' if flag == 'support' else flag] = value
    for flag in ('x', 'y'):
        value = getattr(args, flag)
        if value is not None:
            params[flag] = _json_flag(flag, value)
    data['params'] = params
    return Scenario.model_validate(data)


def _require(value, flag: str, command: str):
    if value is None:
        raise PreconditionError(f"{command} needs --{flag}")
    return value


# ── Subcommands ─────────────────────────────────────────────────────────

def run_check_t(sc: Scenario) -> Tuple[int, dict]:
    p = sc.params
    verdict = check_t_convexity(sc.build_function(), sc.build_domain(), _require(p.t, 't', 'check-t'),
                                samples=p.samples, tol=p.tol, seed=p.seed)
    return STATUS_EXIT[verdict.status], {'verdict': verdict}


def run_check_ts(sc: Scenario) -> Tuple[int, dict]:
    p = sc.params
    if p.t is None and p.s is None:
        params = reduction_to_ts(sc.weights_lambda(), sc.weights_mu())
        logger.info("Using (t, s) = (lambda_1, mu_1) = (%.6g, %.6g)", params.t, params.s)
    else:
        params = ConvexityParams(_require(p.t, 't', 'check-ts'), _require(p.s, 's', 'check-ts'))
    verdict = check_ts_convexity(sc.build_function(), sc.build_domain(), params,
                                 samples=p.samples, tol=p.tol, seed=p.seed)
    return STATUS_EXIT[verdict.status], {'params': {'t': params.t, 's': params.s}, 'verdict': verdict}


def run_jensen(sc: Scenario) -> Tuple[int, dict]:
    p = sc.params
    D = sc.build_domain()
    f = sc.build_function()
    if sc.distribution is not None:
        verdict = check_jensen_discrete(f, D, sc.build_distribution(), tol=p.tol)
    else:
        verdict = jensen_suite(f, D, trials=p.samples, tol=p.tol, seed=p.seed)
    return STATUS_EXIT[verdict.status], {'verdict': verdict}


def run_check_inf(sc: Scenario) -> Tuple[int, dict]:
    p = sc.params
    verdict = check_infinite_combination(sc.build_function(), sc.build_domain(), sc.weights_lambda(),
                                         sc.weights_mu(), sc.build_sequence(), N=p.depth, tol=p.tol)
    return STATUS_EXIT[verdict.status], {'verdict': verdict}


def run_bracket(sc: Scenario) -> Tuple[int, dict]:
    p = sc.params
    a, b = p.a, p.b
    D = sc.build_domain()
    if (a is None or b is None) and isinstance(D, Interval):
        a = D.a if a is None else a
        b = D.b if b is None else b
    if a is None or b is None or not (math.isfinite(a) and math.isfinite(b)):
        raise PreconditionError("bracket needs finite --a and --b (or a bounded interval domain)")
    report = pavic_bracket(sc.build_function(1), a, b, sc.weights_lambda(), sc.build_sequence(),
                           N=p.depth, tol=p.tol)
    return (EXIT_HOLDS if report.consistent else EXIT_VIOLATED), {'bracket': report}


def run_expand(sc: Scenario) -> Tuple[int, dict]:
    p = sc.params
    W = sc.weights_lambda()
    N = p.depth or 40
    try:
        E = lambda_expand(W, _require(p.t, 't', 'expand'), N, p.denominator_bound)
    except InfeasibleExpansion as e:
        return EXIT_INCONCLUSIVE, {'status': INCONCLUSIVE, 'detail': str(e), 'step': e.step, 'window': e.window}
    report = {'expansion': E, 'complement_identity': complement_identity_check(E, W),
              'tail_mass': W.tail_mass(N + 1)}
    if p.x is not None and p.y is not None:
        Z = combination_pushforward(E, p.x, p.y)
        point, radius = weighted_point_series(W, Z, N)
        report['pushforward'] = {'sequence': Z.to_json(), 'weighted_sum': point, 'error_radius': radius}
    return EXIT_HOLDS, report


def run_hunt(sc: Scenario) -> Tuple[int, dict]:
    p = sc.params

    def progress(restart: int, gap: float, evaluations: int):
        print(f"restart {restart + 1}: best certified gap {gap:.6g} ({evaluations} evaluations)",
              file=sys.stderr, flush=True)

    witness = find_counterexample(sc.build_function(), sc.build_domain(), sc.weights_lambda(), sc.weights_mu(),
                                  support_size=p.support_size, budget=p.budget, seed=p.seed, tol=p.tol,
                                  progress=progress)
    if witness is None:
        return EXIT_HOLDS, {'witness': None, 'detail': 'no counterexample found within the budget'}
    return EXIT_VIOLATED, {'witness': witness}


def emit_remark_demo(lambda_ratio: float = 0.5, mu_ratio: float = 2.0 / 3.0) -> dict:
    """End-to-end reproduction of the exp counterexample for lambda != mu.

    With geometric weights the first weights are 1 - ratio, so the default
    ratios give lambda_1 = 1/2 and mu_1 = 1/3.
    """
    W_lambda, W_mu = GeometricWeights(ratio=lambda_ratio), GeometricWeights(ratio=mu_ratio)
    lambda1, mu1 = W_lambda.first, W_mu.first
    f = builtin('exp')
    X = FiniteSupportSequence([[1.0]], [0.0])
    verdict = check_infinite_combination(f, real_line(), W_lambda, W_mu, X)
    sides = combination_sides(f, W_lambda, W_mu, X, verdict.samples_checked)
    return {
        'lambda': W_lambda.to_json(),
        'mu': W_mu.to_json(),
        'lambda1': lambda1,
        'mu1': mu1,
        'condition': exp_condition(lambda1, mu1),
        'predicted_gap': remark_gap(lambda1, mu1),
        'lhs': sides.lhs,
        'rhs': sides.rhs.value,
        'verdict': verdict,
    }


def _narrative(report: dict) -> str:
    verdict = report['verdict']
    lines = [
        f"lambda_1 = {report['lambda1']:.10g}, mu_1 = {report['mu1']:.10g}",
        f"(e^lambda_1 - 1)/(e - 1) > mu_1 : {report['condition']}",
        "sequence x_1 = 1, x_i = 0 for i >= 2, f = exp",
        f"  f(sum lambda_i x_i) = {report['lhs']:.10f}",
        f"  sum mu_i f(x_i)     = {report['rhs']:.10f}",
        f"  gap                 = {report['lhs'] - report['rhs']:.10f}",
        f"verdict: {verdict.status}",
    ]
    return "\n".join(lines)


# ── Entry point ─────────────────────────────────────────────────────────

def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='convexity', description="Convexity inequality checks")
    parser.add_argument('command', choices=SUBCOMMANDS)
    parser.add_argument('--scenario', help="scenario JSON file")
    parser.add_argument('--preset', help="named scenario from config.json")
    parser.add_argument('--function', help="expression in x1..xd, or builtin:<name>")
    parser.add_argument('--lower-bound', dest='lower_bound', type=float)
    parser.add_argument('--domain', help="domain JSON")
    parser.add_argument('--lambda', dest='lambda_', help="weight sequence JSON")
    parser.add_argument('--mu', help="weight sequence JSON (defaults to --lambda)")
    parser.add_argument('--lambda-ratio', dest='lambda_ratio', type=float)
    parser.add_argument('--mu-ratio', dest='mu_ratio', type=float)
    parser.add_argument('--sequence', help="bounded sequence JSON")
    parser.add_argument('--distribution', help="discrete distribution JSON")
    parser.add_argument('--t', type=float)
    parser.add_argument('--s', type=float)
    parser.add_argument('--a', type=float)
    parser.add_argument('--b', type=float)
    parser.add_argument('--x', help="point JSON")
    parser.add_argument('--y', help="point JSON")
    parser.add_argument('--depth', type=int)
    parser.add_argument('--tol', type=float)
    parser.add_argument('--seed', type=int)
    parser.add_argument('--budget', type=int)
    parser.add_argument('--samples', type=int)
    parser.add_argument('--denominator-bound', dest='denominator_bound', type=int)
    parser.add_argument('--support', type=int)
    parser.add_argument('--json', action='store_true', help="machine-readable output for remark")
    return parser


RUNNERS = {
    'check-t': run_check_t,
    'check-ts': run_check_ts,
    'jensen': run_jensen,
    'check-inf': run_check_inf,
    'bracket': run_bracket,
    'expand': run_expand,
    'hunt': run_hunt,
}


def _emit(command: str, code: int, report: dict):
    print(dumps({'command': command, 'exit_code': code, **report}))


def run(argv: Optional[list] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == 'schema':
            print(json.dumps(scenario_schema(), indent=2))
            return EXIT_HOLDS
        if args.command == 'remark':
            report = emit_remark_demo(args.lambda_ratio if args.lambda_ratio is not None else 0.5,
                                      args.mu_ratio if args.mu_ratio is not None else 2.0 / 3.0)
            code = STATUS_EXIT[report['verdict'].status]
            if args.json:
                _emit('remark', code, report)
            else:
                print(_narrative(report))
            return code
        scenario = build_scenario(args)
        code, report = RUNNERS[args.command](scenario)
    except EvaluationError as e:
        logger.warning("Evaluation failed: %s", e)
        _emit(args.command, EXIT_INCONCLUSIVE, {'status': INCONCLUSIVE, 'error': str(e), 'point': e.point})
        return EXIT_INCONCLUSIVE
    except (ValidationError, ConvexityError, OSError) as e:
        logger.error("Input error: %s", e)
        _emit(args.command, EXIT_INPUT_ERROR, {'error': str(e), 'type': type(e).__name__})
        return EXIT_INPUT_ERROR
    _emit(args.command, code, report)
    return code


def main(argv: Optional[list] = None) -> int:
    logging.basicConfig(level=os.getenv('CONVEXITY_LOG_LEVEL', 'INFO').upper(), stream=sys.stderr,
                        format='%(asctime)s [%(name)s] %(levelname)s: %(message)s')
    return run(argv)


if __name__ == '__main__':
    sys.exit(main())
