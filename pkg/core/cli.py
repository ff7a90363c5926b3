"""
CLI - Command-line subcommands: prepare, train, eval, generate, compare-beams, sweep, grid, synth

Exit codes: 0 success, 1 runtime error or divergence abort, 2 usage, configuration
or missing input file.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, TextIO

from core.config import TrainingConfig, apply_overrides, config_keys, load_config
from core.errors import ConfigError, ContractError, IncompatibleCheckpointError, ToolkitError
from core.run_manager import RunManager, load_checkpoint
from dialogue.corpus import (assemble_context, bigram_stats, build_pairs, corpus_bigram_report,
                             count_unk_substitutions, load_corpus, load_split_ids, save_pairs,
                             split_dialogues, target_sentences, tokenize)
from dialogue.embeddings import load_embeddings
from dialogue.synthetic import make_synthetic
from dialogue.vocabulary import SEP_TOKEN, Vocabulary, build_vocab
from evaluation.metrics import METRIC_COLUMNS, strip_special
from evaluation.reports import emit_reports, save_rows_csv
from generators.base_generator import get_generator, list_generator_modes
from training.experiments import alpha_sweep, init_loss_grid
from training.trainer import evaluate, prepare_data, train

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2
_DEFAULTS = TrainingConfig()


def _add_config_flags(parser: argparse.ArgumentParser):
    """--config plus one --kebab-case flag per configuration key (flags win over the file)."""
    parser.add_argument("--config", help="flat key=value configuration file")
    group = parser.add_argument_group("configuration overrides")
    for key in config_keys():
        default = getattr(_DEFAULTS, key)
        if isinstance(default, list):
            default = ",".join(str(v) for v in default)
        group.add_argument(f"--{key.replace('_', '-')}", dest=key, default=argparse.SUPPRESS,
                           metavar=key.upper(), help=f"(default: {default})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dialogue-toolkit",
                                     description="Dialogue generation with a semantic REINFORCE loss")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    subparsers = parser.add_subparsers(dest="command", required=True)

    prepare = subparsers.add_parser("prepare", help="write vocabulary, pair files and bigram statistics")
    prepare.add_argument("corpus", help="JSON Lines corpus")
    _add_config_flags(prepare)

    train_parser = subparsers.add_parser("train", help="train every configured seed and emit reports")
    _add_config_flags(train_parser)

    evaluate_parser = subparsers.add_parser("eval", help="evaluate a checkpoint")
    evaluate_parser.add_argument("checkpoint")
    evaluate_parser.add_argument("corpus", nargs="?", help="corpus (default: the checkpoint's corpus_file)")
    evaluate_parser.add_argument("--vocab", help="vocabulary file (default: found next to the checkpoint)")
    evaluate_parser.add_argument("--split", choices=["valid", "train", "all"], default="valid")
    evaluate_parser.add_argument("--out", help="write the report as a one-row metrics CSV")
    _add_config_flags(evaluate_parser)

    generate = subparsers.add_parser("generate", help="decode one response per input context line")
    generate.add_argument("checkpoint")
    generate.add_argument("--input", help="contexts, one per line; turns separated by ' <sep> ' (default: stdin)")
    generate.add_argument("--vocab")
    generate.add_argument("--mode", choices=list_generator_modes(), default="greedy")
    generate.add_argument("--seed", type=int, default=0, help="sampling seed for --mode sample")
    _add_config_flags(generate)

    compare = subparsers.add_parser("compare-beams", help="side-by-side beams of two checkpoints")
    compare.add_argument("checkpoint_a")
    compare.add_argument("checkpoint_b")
    compare.add_argument("contexts", help="contexts, one per line")
    compare.add_argument("--vocab")
    compare.add_argument("--out", help="output text file (default: stdout)")
    _add_config_flags(compare)

    sweep = subparsers.add_parser("sweep", help="alpha sweep over 10^[-2, 2] plus the MLE baseline")
    sweep.add_argument("--alphas", help="comma-separated alpha values instead of the log grid")
    _add_config_flags(sweep)

    grid = subparsers.add_parser("grid", help="random vs table init crossed with MLE vs MLE + SEM")
    _add_config_flags(grid)

    synth = subparsers.add_parser("synth", help="write the synthetic corpus and word vectors")
    synth.add_argument("out_dir")
    synth.add_argument("--dialogues", type=int, default=500)
    synth.add_argument("--dim", type=int, default=50)
    synth.add_argument("--seed", type=int, default=0)
    return parser


def resolve_config(args: argparse.Namespace, base: Optional[TrainingConfig] = None) -> TrainingConfig:
    """Configuration file (or base), then command-line overrides."""
    config = base or TrainingConfig()
    if getattr(args, "config", None):
        config = load_config(args.config)
    overrides = {key: value for key, value in vars(args).items() if key in config_keys()}
    return apply_overrides(config, overrides)


def _require_file(path: Optional[str], what: str) -> str:
    if not path:
        raise ConfigError([(what, "a path is required")])
    if not Path(path).is_file():
        raise FileNotFoundError(f"{what}: no such file: {path}")
    return path


def _find_vocab(checkpoint: str, explicit: Optional[str]) -> str:
    if explicit:
        return _require_file(explicit, "vocab")
    for folder in (Path(checkpoint).parent, Path(checkpoint).parent.parent):
        candidate = folder / "vocab.txt"
        if candidate.is_file():
            return str(candidate)
    raise FileNotFoundError(f"no vocab.txt next to {checkpoint}; pass --vocab")


def _read_contexts(lines: Sequence[str], context_cap: int) -> List[List[str]]:
    contexts = []
    for line in lines:
        if not line.strip():
            continue
        turns = [tokenize(turn) for turn in line.split(SEP_TOKEN)]
        contexts.append(assemble_context([t for t in turns if t], context_cap))
    return contexts


def _load_table(config: TrainingConfig, corpus_tokens: Optional[set] = None):
    if not config.embedding_file:
        return None
    return load_embeddings(_require_file(config.embedding_file, "embedding_file"), corpus_tokens)


def _corpus_tokens(dialogues) -> set:
    return {tok for d in dialogues for turn in d.turns for tok in turn.tokens}


def cmd_prepare(args: argparse.Namespace, out: TextIO) -> int:
    config = resolve_config(args).validate()
    dialogues, report = load_corpus(_require_file(args.corpus, "corpus"))
    valid_ids = load_split_ids(config.split_file) if config.split_file else None
    train_dialogues, valid_dialogues = split_dialogues(dialogues, config.valid_ratio, valid_ids)
    train_pairs = build_pairs(train_dialogues, config.context_cap, report)
    valid_pairs = build_pairs(valid_dialogues, config.context_cap, report)
    vocab = build_vocab(train_pairs, config.min_count)

    out_dir = RunManager(config.out_dir).prepare()
    vocab.save(str(out_dir / "vocab.txt"))
    save_pairs(train_pairs, str(out_dir / "train_pairs.jsonl"))
    save_pairs(valid_pairs, str(out_dir / "valid_pairs.jsonl"))

    stats = {name: s.to_dict() for name, s in corpus_bigram_report(train_pairs).items()}
    stats["unk_substitutions"] = count_unk_substitutions(train_pairs + valid_pairs, vocab)
    stats["load_report"] = report.to_dict()
    stats["pairs"] = {"train": len(train_pairs), "valid": len(valid_pairs)}
    (out_dir / "bigram_stats.json").write_text(json.dumps(stats, indent=1, sort_keys=True) + "\n",
                                              encoding="utf-8")
    out.write(f"prepared {len(train_pairs)} training and {len(valid_pairs)} validation pairs "
              f"(vocabulary {len(vocab)}) in {out_dir}\n")
    return EXIT_OK


def _load_training_data(config: TrainingConfig):
    dialogues, _ = load_corpus(_require_file(config.corpus_file, "corpus_file"))
    table = _load_table(config, _corpus_tokens(dialogues))
    return prepare_data(config, dialogues, table)


def _finish(records, out_dir: str, run_manager: RunManager, out: TextIO) -> int:
    emit_reports(records, out_dir, run_manager)
    diverged = [r for r in records if r.diverged]
    for record in diverged:
        out.write(f"seed {record.seed} diverged at step {record.diverged_step}\n")
    return EXIT_RUNTIME if diverged else EXIT_OK


def cmd_train(args: argparse.Namespace, out: TextIO) -> int:
    config = resolve_config(args).validate(require_embeddings=True)
    data = _load_training_data(config)
    run_manager = RunManager(config.out_dir)
    run_manager.save_config_snapshot(config)
    data.vocab.save(str(run_manager.out_dir / "vocab.txt"))

    records = train(config, data, config.out_dir)
    status = _finish(records, config.out_dir, run_manager, out)
    out.write(f"reports written to {config.out_dir}\n")
    return status


def cmd_experiments(args: argparse.Namespace, out: TextIO) -> int:
    config = resolve_config(args)
    needs_table = config.replace(alpha=max(config.alpha, 0.1))
    needs_table.validate(require_embeddings=True)
    data = _load_training_data(config)
    base_manager = RunManager(config.out_dir)
    base_manager.save_config_snapshot(config)
    data.vocab.save(str(base_manager.out_dir / "vocab.txt"))

    if args.command == "sweep":
        alphas = [float(a) for a in args.alphas.split(",")] if args.alphas else None
        results = alpha_sweep(config, data, alphas, config.out_dir)
    else:
        results = init_loss_grid(config, data, config.out_dir)

    status = EXIT_OK
    for name, records in results.items():
        sub_dir = str(Path(config.out_dir) / name)
        data.vocab.save(str(Path(sub_dir) / "vocab.txt"))
        if _finish(records, sub_dir, RunManager(sub_dir), out) != EXIT_OK:
            status = EXIT_RUNTIME
        final = [r.final_metrics() for r in records if r.final_metrics() is not None]
        if final:
            mean_bleu = sum(m.bleu for m in final) / len(final)
            mean_d2 = sum(m.distinct2.value for m in final) / len(final)
            out.write(f"{name}: bleu={mean_bleu:.4f} distinct2={mean_d2:.4f}\n")
    return status


def _load_model(checkpoint: str, vocab_path: Optional[str]):
    vocab = Vocabulary.load(_find_vocab(_require_file(checkpoint, "checkpoint"), vocab_path))
    model, config, _ = load_checkpoint(checkpoint, vocab)
    return model, config, vocab


def cmd_eval(args: argparse.Namespace, out: TextIO) -> int:
    model, trained_config, vocab = _load_model(args.checkpoint, args.vocab)
    config = resolve_config(args, trained_config)
    corpus = _require_file(args.corpus or config.corpus_file, "corpus")

    dialogues, _ = load_corpus(corpus)
    valid_ids = load_split_ids(config.split_file) if config.split_file else None
    train_dialogues, valid_dialogues = split_dialogues(dialogues, config.valid_ratio, valid_ids)
    train_pairs = build_pairs(train_dialogues, config.context_cap)
    pairs = {
        "valid": build_pairs(valid_dialogues, config.context_cap),
        "train": train_pairs,
        "all": build_pairs(dialogues, config.context_cap),
    }[args.split]
    if config.eval_max_pairs:
        pairs = pairs[:config.eval_max_pairs]

    table = _load_table(config, _corpus_tokens(dialogues))
    report = evaluate(model, pairs, bigram_stats(target_sentences(train_pairs)), table, vocab, config.max_len)
    out.write(report.format() + "\n")
    if args.out:
        save_rows_csv(Path(args.out), [report.to_row(0)], METRIC_COLUMNS)
    return EXIT_OK


def _detokenize(tokens: Sequence[str]) -> str:
    return " ".join(strip_special(tokens))


def cmd_generate(args: argparse.Namespace, out: TextIO) -> int:
    model, trained_config, vocab = _load_model(args.checkpoint, args.vocab)
    config = resolve_config(args, trained_config)
    if args.input:
        lines = Path(_require_file(args.input, "input")).read_text(encoding="utf-8").splitlines()
    else:
        lines = sys.stdin.read().splitlines()

    generator = get_generator(args.mode, beam_width=config.beam_width, seed=args.seed)
    for context in _read_contexts(lines, config.context_cap):
        hypotheses = generator.generate(model, vocab.encode(context), config.max_len)
        if args.mode == "beam":
            for rank, hypothesis in enumerate(hypotheses, start=1):
                out.write(f"{rank}\t{hypothesis.score:.4f}\t{_detokenize(vocab.decode(hypothesis.token_ids))}\n")
        else:
            out.write(_detokenize(vocab.decode(hypotheses[0].token_ids)) + "\n")
    return EXIT_OK


def format_beam_comparison(contexts: Sequence[Sequence[str]], columns: Dict[str, List[list]]) -> str:
    """One block per context, then each model's ranked beams with their normalized scores."""
    blocks = []
    for position, context in enumerate(contexts):
        lines = [f"context: {' '.join(context)}"]
        for label, per_context in columns.items():
            lines.append(f"  [{label}]")
            for rank, (text, score) in enumerate(per_context[position], start=1):
                lines.append(f"    {rank}. {text}  ({score:.4f})")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def cmd_compare_beams(args: argparse.Namespace, out: TextIO) -> int:
    model_a, config_a, vocab = _load_model(args.checkpoint_a, args.vocab)
    model_b, _ = load_checkpoint(_require_file(args.checkpoint_b, "checkpoint_b"), vocab)[:2]
    config = resolve_config(args, config_a)
    lines = Path(_require_file(args.contexts, "contexts")).read_text(encoding="utf-8").splitlines()
    contexts = _read_contexts(lines, config.context_cap)

    generator = get_generator("beam", beam_width=config.beam_width)
    columns: Dict[str, List[list]] = {}
    for label, model in ((args.checkpoint_a, model_a), (args.checkpoint_b, model_b)):
        columns[label] = [
            [(_detokenize(vocab.decode(h.token_ids)), h.score)
             for h in generator.generate(model, vocab.encode(context), config.max_len)]
            for context in contexts
        ]
    text = format_beam_comparison(contexts, columns)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        out.write(text)
    return EXIT_OK


def cmd_synth(args: argparse.Namespace, out: TextIO) -> int:
    if args.dialogues < 1 or args.dim < 1:
        raise ConfigError([("dialogues/dim", "must be >= 1")])
    corpus_path, vectors_path = make_synthetic(args.out_dir, args.dialogues, args.dim, args.seed)
    out.write(f"{corpus_path}\n{vectors_path}\n")
    return EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace, TextIO], int]] = {
    "prepare": cmd_prepare,
    "train": cmd_train,
    "eval": cmd_eval,
    "generate": cmd_generate,
    "compare-beams": cmd_compare_beams,
    "sweep": cmd_experiments,
    "grid": cmd_experiments,
    "synth": cmd_synth,
}


def run(argv: Optional[Sequence[str]] = None, out: TextIO = sys.stdout) -> int:
    """Parse arguments, run one subcommand and map failures to exit codes."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    logging.getLogger().setLevel(args.log_level)
    try:
        return COMMANDS[args.command](args, out)
    except ConfigError as e:
        logger.error(f"Configuration error in {', '.join(e.keys)}: {e}")
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE
    except FileNotFoundError as e:
        logger.error(str(e))
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE
    except (IncompatibleCheckpointError, ContractError, ToolkitError, OSError, ValueError) as e:
        logger.error(f"{args.command} failed: {e}")
        sys.stderr.write(f"error: {e}\n")
        return EXIT_RUNTIME
