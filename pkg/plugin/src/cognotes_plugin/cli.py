import argparse
import sys


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cognotes-plugin",
        description="transformer scorer plugin for the cognotes pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("finetune", help="hyperparameter search + fine-tune")
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--max-len", type=int, default=160)
    p.add_argument("--batch-size", type=int, default=32)

    p = sub.add_parser("serve", help="score batches over stdin/stdout")
    p.add_argument("--model-dir", required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "finetune":
            from .train import finetune

            log = finetune(
                args.train, args.val, args.out_dir,
                trials=args.trials, seed=args.seed, dim=args.dim,
                depth=args.depth, max_len=args.max_len,
                batch_size=args.batch_size,
            )
            best = max(log, key=lambda r: (r.val_auc, -r.trial))
            print(f"best trial {best.trial}: val_auc={best.val_auc:.4f} "
                  f"lr={best.learning_rate:.2e} eps={best.adam_epsilon:.2e}")
        else:
            from .serve import serve

            serve(args.model_dir)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
