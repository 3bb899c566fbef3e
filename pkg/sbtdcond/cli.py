# -*- coding: utf-8 -*-
"""Command-line interface: `sbtdcond {cond,gen,verify,bench,probe}`.

Exit codes: 0 ok, 1 input error, 2 ill-posed, 3 verification failure.
Records are printed one JSON object per line (`--format text`: `key: value`
lines, 17 significant digits).
"""
import sys
import logging
import argparse
from . import experiments
from .condition import condition_number
from .sbtd import validate
from .serialization import load_sbtd, save_sbtd, to_record, dumps_record
from .serialization import format_text
from .utils import IllPosedError, relative_difference

EXIT_OK, EXIT_INPUT, EXIT_ILLPOSED, EXIT_VERIFY = 0, 1, 2, 3


#### Argument parsing ########################################################
def parse_ints(text):
    """'4,4,2' -> (4, 4, 2)"""
    try:
        return tuple(int(v) for v in text.split(','))
    except ValueError:
        raise ValueError("expected comma-separated integers (got '%s')" % text)


def parse_ranks(text):
    """Multilinear ranks of all terms: ';'-separated tuples, each optionally
    repeated with a `Kx` prefix. '2x2,2,1' == '2,2,1;2,2,1'; '3x1,1,1' is a
    rank-3 CPD.
    """
    ranks = []
    for item in text.split(';'):
        count, _, spec = item.rpartition('x')
        count = int(count) if count else 1
        if count < 1:
            raise ValueError("repeat count must be positive (got '%s')" % item)
        ranks.extend([parse_ints(spec)] * count)
    return ranks


def parse_params(pairs):
    params = {}
    for pair in pairs or []:
        key, sep, value = pair.partition('=')
        if not sep or not key:
            raise ValueError("--param must be key=value (got '%s')" % pair)
        params[key] = value
    return params


def _pop(params, key, default, parse):
    return parse(params.pop(key)) if key in params else default


def _check_consumed(params, model):
    if params:
        raise ValueError("unknown --param for model '%s': %s" % (
            model, ', '.join(sorted(params))))


#### Output ##################################################################
def emit(record, fmt='json', stream=None):
    stream = sys.stdout if stream is None else stream
    text = dumps_record(record) if fmt == 'json' else format_text(record)
    stream.write(text + '\n')
    stream.flush()


def _load_valid(path):
    s = load_sbtd(path)
    report = validate(s)
    if not report.ok:
        raise ValueError("%s: invalid decomposition: %s" % (
            path, '; '.join(report.failures)))
    return s


#### Commands ################################################################
def cmd_cond(args):
    s = _load_valid(args.decomp)
    methods = ('direct', 'compressed') if args.method == 'both' else (
        args.method,)
    reports = [condition_number(s, method, abs_tol=args.tol)
               for method in methods]
    for report in reports:
        emit(to_record(report), args.format)
    if len(reports) == 2:
        emit(dict(kappa_rel_discrepancy=relative_difference(
            reports[0].kappa, reports[1].kappa)), args.format)
    if args.fail_on_illposed and any(rep.ill_posed for rep in reports):
        return EXIT_ILLPOSED
    return EXIT_OK


def cmd_gen(args):
    params = parse_params(args.param)
    model, seed = args.model, args.seed
    inflated = None

    if model == 'illcond-btd':
        p = experiments.IllCondParams(
            N=_pop(params, 'N', 1., float),
            inflated_dims=_pop(params, 'inflated_dims', (60, 40, 40),
                               parse_ints), seed=seed)
        _check_consumed(params, model)
        s, inflated = experiments.gen_illcond_btd(p)
    elif model == 'illcond-cpd':
        N = _pop(params, 'N', 1., float)
        dims = _pop(params, 'dims', (4, 4, 4), parse_ints)
        _check_consumed(params, model)
        s = experiments.gen_illcond_cpd(N, dims, seed)
    elif model == 'random-cpd':
        dims = _pop(params, 'dims', (5, 5, 5), parse_ints)
        rank = _pop(params, 'rank', 3, int)
        _check_consumed(params, model)
        s = experiments.gen_random_sbtd(dims, 'rank1', [None] * rank, seed)
    elif model == 'random-btd':
        dims = _pop(params, 'dims', (4, 4, 2), parse_ints)
        ranks = _pop(params, 'ranks', [(2, 2, 1)] * 2, parse_ranks)
        _check_consumed(params, model)
        s = experiments.gen_random_sbtd(dims, 'full', ranks, seed)
    else:  # odeco
        dims = _pop(params, 'dims', (6, 6, 6), parse_ints)
        ranks = _pop(params, 'ranks', [(2, 2, 2)] * 2, parse_ranks)
        structure = _pop(params, 'structure', 'full', str)
        _check_consumed(params, model)
        s = experiments.gen_odeco_sbtd(dims, ranks, seed, structure)

    if args.out_inflated and inflated is None:
        raise ValueError("--out-inflated is only supported by illcond-btd")
    save_sbtd(args.out, s)
    record = dict(model=model, seed=seed, out=args.out, dims=list(s.dims))
    if args.out_inflated:
        save_sbtd(args.out_inflated, inflated)
        record.update(out_inflated=args.out_inflated,
                      inflated_dims=list(inflated.dims))
    emit(record)
    return EXIT_OK


def cmd_verify(args):
    summary = experiments.verify_invariance(
        trials=args.trials, seed=args.seed, max_kappa=args.max_kappa,
        rtol=args.rtol, rtol_relaxed=args.rtol_relaxed,
        max_size=args.max_size, family=args.family)
    records = summary.pop('records')
    for record in records:
        if args.all_records or record['passed'] is False:
            emit(record)
    emit(summary)
    return EXIT_OK if summary['failed'] == 0 else EXIT_VERIFY


def cmd_bench(args):
    ranks = parse_ranks(args.ranks)
    for dims in args.dims or ['60,40,40']:
        emit(experiments.bench_condition(
            parse_ints(dims), ranks, repeat=args.repeat, seed=args.seed,
            direct=not args.compressed_only))
    return EXIT_OK


def cmd_probe(args):
    s = _load_valid(args.decomp)
    result = experiments.perturbation_probe(s, args.samples, args.seed,
                                            args.inject_singular)
    emit(to_record(result))
    if result.max_ratio > result.kappa_ref * (1 + 1e-8):
        return EXIT_VERIFY
    return EXIT_OK


#### Entry point #############################################################
def make_parser():
    parser = argparse.ArgumentParser(
        prog='sbtdcond', description="Condition numbers of structured block "
        "term decompositions, directly and via Tucker compression.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--verbose', action='store_true',
                        help="log progress (INFO level)")
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('cond', parents=[common],
                       help="condition number of a decomposition")
    p.add_argument('--decomp', required=True, help="decomposition .json")
    p.add_argument('--method', choices=['direct', 'compressed', 'both'],
                   default='compressed')
    p.add_argument('--tol', type=float, default=None,
                   help="sigma_min threshold for ill-posedness "
                   "(default 1e-14 * sigma_max)")
    p.add_argument('--format', choices=['json', 'text'], default='json')
    p.add_argument('--fail-on-illposed', action='store_true',
                   help="exit 2 if the decomposition is ill-posed")
    p.set_defaults(fn=cmd_cond)

    p = sub.add_parser('gen', parents=[common],
                       help="write a synthetic decomposition")
    p.add_argument('--model', required=True,
                   choices=['illcond-btd', 'illcond-cpd', 'random-cpd',
                            'random-btd', 'odeco'])
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--param', action='append', metavar='K=V',
                   help="model parameter, e.g. N=100, dims=4,4,2, "
                   "ranks=2x2,2,1")
    p.add_argument('--out', required=True)
    p.add_argument('--out-inflated', default=None)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser('verify', parents=[common],
                       help="check invariance under Tucker compression")
    p.add_argument('--trials', type=int, default=200)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--max-kappa', type=float, default=1e12)
    p.add_argument('--rtol', type=float, default=1e-8)
    p.add_argument('--rtol-relaxed', type=float, default=1e-4)
    p.add_argument('--max-size', type=int, default=8000)
    p.add_argument('--family', choices=['mixed', 'illcond'], default='mixed')
    p.add_argument('--all-records', action='store_true',
                   help="print every trial, not only failures")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser('bench', parents=[common],
                       help="time direct vs compressed computation")
    p.add_argument('--dims', action='append', metavar='LIST',
                   help="ambient dims, e.g. 60,40,40; repeatable")
    p.add_argument('--ranks', default='2x2,2,1', metavar='SPEC')
    p.add_argument('--repeat', type=int, default=3)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--compressed-only', action='store_true',
                   help="skip the direct method")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser('probe', parents=[common],
                       help="Monte-Carlo perturbation probe")
    p.add_argument('--decomp', required=True)
    p.add_argument('--samples', type=int, default=1000)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--inject-singular', action='store_true',
                   help="first sample is the sigma_min singular direction")
    p.set_defaults(fn=cmd_probe)
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.INFO)
    try:
        return args.fn(args)
    except IllPosedError as e:
        sys.stderr.write("ill-posed: %s\n" % e)
        return EXIT_ILLPOSED
    except (ValueError, TypeError, OSError) as e:
        sys.stderr.write("error: %s\n" % e)
        return EXIT_INPUT
