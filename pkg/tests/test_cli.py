"""Tests for cli.py: subcommands, scenario assembly and exit codes."""
import json

import pytest

from cli import (EXIT_HOLDS, EXIT_INCONCLUSIVE, EXIT_INPUT_ERROR, EXIT_VIOLATED, emit_remark_demo, run)


def _report(capsys) -> dict:
    return json.loads(capsys.readouterr().out)


class TestCheckCommands:

    def test_check_inf_remark_preset(self, capsys):
        assert run(['check-inf', '--preset', 'remark']) == EXIT_VIOLATED
        report = _report(capsys)
        assert report['command'] == 'check-inf'
        assert report['exit_code'] == EXIT_VIOLATED
        assert report['verdict']['status'] == 'violated'
        assert report['verdict']['gap'] == pytest.approx(0.0759606612, abs=1e-9)
        assert report['verdict']['witness']['check'] == 'infinite-combination'

    def test_check_inf_with_equal_weights(self, capsys):
        code = run(['check-inf', '--preset', 'remark', '--mu-ratio', '0.5'])
        assert code == EXIT_HOLDS
        assert _report(capsys)['verdict']['status'] == 'holds-on-samples'

    def test_check_inf_evaluation_error(self, capsys):
        code = run(['check-inf', '--function', 'log(x)', '--sequence', '{"generator": "constant", "point": 0.0}'])
        assert code == EXIT_INCONCLUSIVE
        assert _report(capsys)['verdict']['status'] == 'inconclusive'

    def test_check_t_violation(self, capsys):
        assert run(['check-t', '--function', 'builtin:neg-square', '--t', '0.5']) == EXIT_VIOLATED
        assert _report(capsys)['verdict']['gap'] == pytest.approx(0.25)

    def test_check_t_needs_t(self, capsys):
        assert run(['check-t']) == EXIT_INPUT_ERROR
        assert 'needs --t' in _report(capsys)['error']

    def test_check_t_holds(self, capsys):
        assert run(['check-t', '--t', '0.3', '--samples', '200']) == EXIT_HOLDS
        assert _report(capsys)['verdict']['samples_checked'] == 200

    def test_check_ts_reduction(self, capsys):
        assert run(['check-ts', '--preset', 'remark-search']) == EXIT_VIOLATED
        report = _report(capsys)
        assert report['params']['t'] == 0.5
        assert report['params']['s'] == pytest.approx(1.0 / 3.0)

    def test_check_ts_explicit(self, capsys):
        code = run(['check-ts', '--function', 'builtin:linear(1,0)', '--t', '0.2', '--s', '0.8'])
        assert code == EXIT_VIOLATED
        assert _report(capsys)['verdict']['gap'] == pytest.approx(0.6)


class TestJensenCommand:

    def test_preset(self, capsys):
        assert run(['jensen', '--preset', 'jensen-symmetric']) == EXIT_HOLDS
        assert _report(capsys)['verdict']['gap'] == pytest.approx(-1.0)

    def test_concave_distribution(self, capsys):
        code = run(['jensen', '--preset', 'jensen-symmetric', '--function', 'builtin:neg-square'])
        assert code == EXIT_VIOLATED
        assert _report(capsys)['verdict']['gap'] == pytest.approx(1.0)

    def test_random_suite(self, capsys):
        assert run(['jensen', '--function', 'builtin:square', '--samples', '20']) == EXIT_HOLDS
        assert _report(capsys)['verdict']['status'] == 'holds-on-samples'


class TestOtherCommands:

    def test_bracket(self, capsys):
        assert run(['bracket', '--preset', 'pavic-square']) == EXIT_HOLDS
        bracket = _report(capsys)['bracket']
        assert bracket['t_star'] == 0.5
        assert bracket['lhs'] == 0.25
        assert bracket['rhs'] == 0.5
        assert bracket['consistent'] is True

    def test_bracket_needs_finite_ends(self, capsys):
        code = run(['bracket', '--domain', '{"shape": "interval"}',
                    '--sequence', '{"generator": "constant", "point": 0.5}'])
        assert code == EXIT_INPUT_ERROR
        capsys.readouterr()

    def test_expand_preset(self, capsys):
        assert run(['expand', '--preset', 'expand-third']) == EXIT_HOLDS
        report = _report(capsys)
        assert len(report['expansion']['digits']) == 20
        assert report['complement_identity'] is True
        assert report['pushforward']['weighted_sum'][0] == pytest.approx(1.0 - 1.0 / 3.0, abs=1e-5)

    def test_expand_out_of_range(self, capsys):
        assert run(['expand', '--t', '1.5']) == EXIT_INPUT_ERROR
        assert 't outside' in _report(capsys)['error']

    def test_expand_infeasible(self, capsys):
        code = run(['expand', '--lambda', '{"kind": "explicit-prefix", "prefix": [0.5, 0.45], "tail_ratio": 0.5}',
                    '--t', '0.635', '--depth', '5', '--denominator-bound', '2'])
        assert code == EXIT_INCONCLUSIVE
        report = _report(capsys)
        assert report['status'] == 'inconclusive'
        assert report['step'] == 2

    def test_hunt_finds_remark(self, capsys):
        assert run(['hunt', '--preset', 'remark-search']) == EXIT_VIOLATED
        witness = _report(capsys)['witness']
        assert witness['seeded_pattern'] is True
        assert witness['gap'] == pytest.approx(0.0759606612, abs=1e-9)

    def test_hunt_nothing_found(self, capsys):
        code = run(['hunt', '--function', 'builtin:square', '--budget', '200'])
        assert code == EXIT_HOLDS
        captured = capsys.readouterr()
        assert json.loads(captured.out)['witness'] is None
        assert 'restart 1:' in captured.err

    def test_schema(self, capsys):
        assert run(['schema']) == EXIT_HOLDS
        schema = json.loads(capsys.readouterr().out)
        assert 'lambda' in schema['properties']


class TestRemark:

    def test_narrative(self, capsys):
        assert run(['remark']) == EXIT_VIOLATED
        out = capsys.readouterr().out
        assert 'verdict: violated' in out
        assert '0.0759606612' in out

    def test_equal_ratios_hold(self, capsys):
        assert run(['remark', '--mu-ratio', '0.5']) == EXIT_HOLDS
        capsys.readouterr()

    def test_json(self, capsys):
        assert run(['remark', '--json']) == EXIT_VIOLATED
        report = _report(capsys)
        assert report['condition'] is True
        assert report['predicted_gap'] == pytest.approx(report['lhs'] - report['rhs'], abs=1e-12)

    def test_demo_report(self):
        report = emit_remark_demo()
        assert report['lambda1'] == 0.5
        assert report['mu1'] == pytest.approx(1.0 / 3.0)
        assert report['verdict'].violated


class TestInputErrors:

    def test_unknown_preset(self, capsys):
        assert run(['check-inf', '--preset', 'nope']) == EXIT_INPUT_ERROR
        assert 'unknown preset' in _report(capsys)['error']

    def test_invalid_json_flag(self, capsys):
        assert run(['check-inf', '--sequence', '{not json']) == EXIT_INPUT_ERROR
        assert _report(capsys)['type'] == 'PreconditionError'

    def test_schema_violation(self, capsys):
        assert run(['check-inf', '--domain', '{"shape": "cube"}']) == EXIT_INPUT_ERROR
        assert _report(capsys)['type'] == 'ValidationError'

    def test_missing_scenario_file(self, capsys, tmp_path):
        assert run(['check-inf', '--scenario', str(tmp_path / 'missing.json')]) == EXIT_INPUT_ERROR
        capsys.readouterr()

    def test_scenario_file(self, capsys, tmp_path):
        path = tmp_path / 'periodic.json'
        path.write_text(json.dumps({
            'function': 'builtin:exp',
            'domain': {'shape': 'interval', 'a': 0.0, 'b': 1.0},
            'lambda': {'kind': 'geometric', 'ratio': 0.5},
            'sequence': {'generator': 'periodic', 'cycle': [0.0, 1.0]},
        }))
        assert run(['check-inf', '--scenario', str(path)]) == EXIT_HOLDS
        capsys.readouterr()

    def test_missing_sequence(self, capsys):
        assert run(['check-inf']) == EXIT_INPUT_ERROR
        assert 'no sequence' in _report(capsys)['error']
