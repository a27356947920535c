"""Experiment-runner CLI.

Each subcommand reads explicit input files (and optionally a JSON config),
writes result CSV/JSON plus a manifest recording seed, config hash and
library versions, and exits 0 on success, 2 on missing inputs, 3 when a
loaded file violates its format invariants. All randomness flows from the
single --seed through named stream splits, so identical invocations
reproduce identical result files byte for byte (timestamps live only in
the manifests).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .alignment import (alignment_from_dict, alignment_to_dict,
                        crossspace_similarity, extract_correspondence,
                        fit_linear, fit_orthogonal, stitch)
from .evaluation import mrr, reconstruction_mse, spearman
from .geometry import (geodesic_oracle_batch, metric_from_name,
                       straight_line_quantities_batch)
from .io_formats import (ConfigError, EmbeddingFormatError, load_config,
                         read_csv_columns, read_embedding, read_labels,
                         write_correspondence_csv, write_csv, write_embedding,
                         write_labels, write_manifest)
from .models import MlpDecoder, load_mlp, save_mlp
from .numerics import RngStream
from .relrep import (AnchorSet, RelRepMatrix, anchors_from_indices,
                     relrep_cosine, relrep_geodesic, select_anchors)
from .synthbench import make_dataset
from .training import TrainConfig, diet_to_dict, train_autoencoder, train_diet

EXIT_OK = 0
EXIT_MISSING_INPUT = 2
EXIT_BAD_FILE = 3


def _require(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"required input not found: {p}")
    return p


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("RELGEO_THREADS")
    return max(1, int(env)) if env else 1


def _layer_spec(entries) -> list[tuple[int, str]]:
    return [(int(width), str(act)) for width, act in entries]


def _load_relrep(path: Path) -> RelRepMatrix:
    values = read_embedding(path)
    meta_path = path.with_name(path.stem + "_meta.json")
    if not meta_path.exists():
        raise FileNotFoundError(f"relrep sidecar not found: {meta_path}")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    return RelRepMatrix(values=values, mode=meta["mode"],
                        anchor_fingerprint=meta["anchor_fingerprint"],
                        metric=meta.get("metric"), steps=meta.get("steps"))


def _save_relrep(out: Path, stem: str, rel: RelRepMatrix,
                 anchors: AnchorSet) -> None:
    write_embedding(out / f"{stem}.rgem", rel.values)
    meta = {
        "mode": rel.mode,
        "metric": rel.metric,
        "steps": rel.steps,
        "anchor_fingerprint": rel.anchor_fingerprint,
        "anchor_indices": anchors.indices.tolist(),
        "anchor_scheme": anchors.scheme,
    }
    (out / f"{stem}_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n",
                                           encoding="utf-8")


def _build_relrep(Z: np.ndarray, anchors: AnchorSet, mode: str, metric_name: str,
                  steps: int, decoder_path: str | None) -> RelRepMatrix:
    if mode == "cosine":
        return relrep_cosine(Z, anchors)
    if decoder_path is None:
        raise FileNotFoundError("geodesic relrep modes require --decoder")
    dec = MlpDecoder(load_mlp(_require(decoder_path)))
    metric = metric_from_name(metric_name)
    geo_mode = mode.removeprefix("geo-")
    return relrep_geodesic(Z, anchors, dec, metric, steps=steps, mode=geo_mode)


def cmd_synth(args) -> int:
    cfg = load_config(_require(args.config))
    seed = args.seed if args.seed is not None else cfg.seed
    ds_spec = cfg.dataset
    if not ds_spec:
        raise ConfigError("config has no dataset section")
    out = _out_dir(args)
    dataset = make_dataset(
        kind=ds_spec.get("kind", "gaussian_mixture"),
        n=int(ds_spec.get("n", 500)),
        ambient_dim=int(ds_spec.get("ambient_dim", 16)),
        noise=float(ds_spec.get("noise", 0.0)),
        rng=RngStream(seed).split("dataset"),
        latent_dim=int(ds_spec.get("latent_dim", 2)),
        n_components=int(ds_spec.get("n_components", 10)),
    )
    write_embedding(out / "data_x.rgem", dataset.X)
    write_embedding(out / "data_z.rgem", dataset.Z)
    write_labels(out / "labels.csv", dataset.labels)
    write_manifest(out / "synth_manifest.json", "synth", seed,
                   config_doc={"dataset": ds_spec, "seed": seed},
                   extra={"rows": int(dataset.X.shape[0])})
    return EXIT_OK


def cmd_train_ae(args) -> int:
    cfg = load_config(_require(args.config))
    seed = args.seed if args.seed is not None else cfg.seed
    if not cfg.models:
        raise ConfigError("config has no models section")
    model_spec = cfg.models[args.model_index]
    data = read_embedding(_require(args.data))
    stream = RngStream(seed + int(model_spec.get("seed_offset", 0)))
    train_cfg = TrainConfig(
        epochs=int(model_spec.get("epochs", 200)),
        batch_size=int(model_spec.get("batch_size", 64)),
        learning_rate=float(model_spec.get("learning_rate", 1e-3)),
        seed=stream.split(f"model:{args.model_index}"),
    )
    encoder, decoder, history = train_autoencoder(
        data, _layer_spec(model_spec["encoder"]), _layer_spec(model_spec["decoder"]),
        train_cfg)
    out = _out_dir(args)
    name = model_spec.get("name", f"model{args.model_index}")
    save_mlp(encoder, out / f"{name}_encoder.json")
    save_mlp(decoder, out / f"{name}_decoder.json")
    write_csv(out / f"{name}_loss.csv", ["epoch", "loss"],
              [(e, float(v)) for e, v in enumerate(history)])
    write_embedding(out / f"{name}_latents.rgem", encoder.forward_batch(data))
    write_manifest(out / f"{name}_train_ae_manifest.json", "train_ae", seed,
                   config_doc={"model": model_spec, "seed": seed},
                   extra={"final_loss": float(history[-1]) if len(history) else None})
    return EXIT_OK


def cmd_train_diet(args) -> int:
    cfg = load_config(_require(args.config))
    seed = args.seed if args.seed is not None else cfg.seed
    model_spec = cfg.models[args.model_index] if cfg.models else {}
    embeddings = read_embedding(_require(args.embeddings))
    labels = read_labels(_require(args.labels))
    stream = RngStream(seed + int(model_spec.get("seed_offset", 0)))
    train_cfg = TrainConfig(
        epochs=int(model_spec.get("epochs", 50)),
        batch_size=int(model_spec.get("batch_size", 64)),
        learning_rate=float(model_spec.get("learning_rate", 1e-3)),
        seed=stream.split(f"diet:{args.model_index}"),
        loss="diet_ce",
    )
    head_spec = _layer_spec(model_spec.get("head", [[64, "tanh"]]))
    head = train_diet(embeddings, labels, head_spec, train_cfg)
    out = _out_dir(args)
    name = model_spec.get("name", f"diet{args.model_index}")
    (out / f"{name}.json").write_text(json.dumps(diet_to_dict(head)) + "\n",
                                      encoding="utf-8")
    write_csv(out / f"{name}_loss.csv", ["epoch", "loss"],
              [(e, float(v)) for e, v in enumerate(head.loss_history)])
    save_mlp(head.f, out / f"{name}_penultimate.json")
    write_manifest(out / f"{name}_train_diet_manifest.json", "train_diet", seed,
                   config_doc={"model": model_spec, "seed": seed},
                   extra={"train_accuracy": head.train_accuracy})
    return EXIT_OK


def _anchor_set(args, Z: np.ndarray, seed: int) -> AnchorSet:
    if args.anchor_indices:
        columns = read_csv_columns(_require(args.anchor_indices))
        key = "anchor_index" if "anchor_index" in columns else "index"
        indices = np.asarray([int(v) for v in columns[key]], dtype=np.int64)
        return anchors_from_indices(Z, indices)
    stream = RngStream(seed).split("anchors")
    return select_anchors(Z, args.anchors, args.scheme, stream)


def cmd_relrep(args) -> int:
    Z = read_embedding(_require(args.latents))
    seed = args.seed if args.seed is not None else 0
    anchors = _anchor_set(args, Z, seed)
    rel = _build_relrep(Z, anchors, args.mode, args.metric, args.steps, args.decoder)
    out = _out_dir(args)
    _save_relrep(out, args.name, rel, anchors)
    write_csv(out / f"{args.name}_anchors.csv", ["anchor_index"],
              [(int(i),) for i in anchors.indices])
    write_manifest(out / f"{args.name}_relrep_manifest.json", "relrep", seed,
                   extra={"mode": rel.mode, "metric": rel.metric,
                          "steps": rel.steps, "anchors": int(anchors.count)})
    return EXIT_OK


def cmd_geodesic_compare(args) -> int:
    dec = MlpDecoder(load_mlp(_require(args.decoder)))
    Z = read_embedding(_require(args.latents))[:args.points]
    metric = metric_from_name(args.metric)
    n = Z.shape[0]
    pair_i, pair_j = np.triu_indices(n, k=1)
    Z0, Z1 = Z[pair_i], Z[pair_j]

    approx_flat = straight_line_quantities_batch(dec, metric, Z0, Z1,
                                                 steps=args.steps, mode="energy")
    workers = _threads(args)
    if workers == 1:
        oracle_flat, _ = geodesic_oracle_batch(dec, metric, Z0, Z1,
                                               steps=args.oracle_steps,
                                               iters=args.oracle_iters,
                                               lr=args.oracle_lr)
    else:
        # Pairs are independent; sharding by block is schedule-insensitive.
        blocks = np.array_split(np.arange(Z0.shape[0]), workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(geodesic_oracle_batch, dec, metric,
                                   Z0[b], Z1[b], args.oracle_steps,
                                   args.oracle_iters, args.oracle_lr)
                       for b in blocks if b.size]
            oracle_flat = np.concatenate([f.result()[0] for f in futures])

    approx = np.zeros((n, n))
    oracle = np.zeros((n, n))
    approx[pair_i, pair_j] = approx_flat
    approx[pair_j, pair_i] = approx_flat
    oracle[pair_i, pair_j] = oracle_flat
    oracle[pair_j, pair_i] = oracle_flat
    rho = spearman(approx_flat, oracle_flat)

    out = _out_dir(args)
    write_embedding(out / "approx_energies.rgem", approx)
    write_embedding(out / "oracle_energies.rgem", oracle)
    write_csv(out / "geodesic_compare.csv",
              ["pair_i", "pair_j", "approx_energy", "oracle_energy"],
              [(int(a), int(b), float(x), float(y))
               for a, b, x, y in zip(pair_i, pair_j, approx_flat, oracle_flat)])
    report = {"spearman_rho": rho, "points": int(n), "steps": args.steps,
              "oracle_steps": args.oracle_steps, "oracle_iters": args.oracle_iters}
    (out / "geodesic_compare.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    write_manifest(out / "geodesic_compare_manifest.json", "geodesic_compare",
                   args.seed or 0, extra=report)
    print(f"spearman_rho={rho:.6f}")
    return EXIT_OK


def _relreps_for_retrieval(args, seed: int) -> tuple[RelRepMatrix, RelRepMatrix]:
    if args.relrep1 and args.relrep2:
        return _load_relrep(_require(Path(args.relrep1))), \
            _load_relrep(_require(Path(args.relrep2)))
    if not (args.latents1 and args.latents2):
        raise FileNotFoundError("retrieve needs --relrep1/--relrep2 or "
                                "--latents1/--latents2")
    Z1 = read_embedding(_require(args.latents1))
    Z2 = read_embedding(_require(args.latents2))
    anchors1 = _anchor_set(args, Z1, seed)
    anchors2 = anchors_from_indices(Z2, anchors1.indices, scheme=anchors1.scheme)
    rel1 = _build_relrep(Z1, anchors1, args.mode, args.metric, args.steps,
                         args.decoder1)
    rel2 = _build_relrep(Z2, anchors2, args.mode, args.metric, args.steps,
                         args.decoder2)
    return rel1, rel2


def cmd_retrieve(args) -> int:
    seed = args.seed if args.seed is not None else 0
    rel1, rel2 = _relreps_for_retrieval(args, seed)
    D = crossspace_similarity(rel1, rel2)
    gt = np.arange(D.shape[0])
    plain = mrr(D, gt, higher_is_better=True, symmetric=False)
    sym = mrr(D, gt, higher_is_better=True, symmetric=True) \
        if D.shape[0] == D.shape[1] else None
    out = _out_dir(args)
    report = {"mrr": plain.mrr, "mrr_symmetric": sym.mrr if sym else None,
              "queries": int(D.shape[0]), "mode": rel1.mode}
    (out / "retrieval.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                                        encoding="utf-8")
    write_csv(out / "retrieval.csv", ["query", "rank"],
              [(int(q), int(r)) for q, r in enumerate(plain.ranks)])
    write_manifest(out / "retrieve_manifest.json", "retrieve", seed, extra=report)
    print(f"mrr={plain.mrr:.6f}")
    return EXIT_OK


def cmd_align(args) -> int:
    Z1 = read_embedding(_require(args.source))
    Z2 = read_embedding(_require(args.target))
    out = _out_dir(args)
    if args.correspondence:
        columns = read_csv_columns(_require(args.correspondence))
        corr = np.asarray([int(v) for v in columns["target_index"]], dtype=np.int64)
        scores = np.asarray([float(v) for v in columns["score"]])
    else:
        rel1 = _load_relrep(_require(Path(args.relrep1)))
        rel2 = _load_relrep(_require(Path(args.relrep2)))
        match = extract_correspondence(crossspace_similarity(rel1, rel2))
        corr, scores = match.indices, match.scores
        write_correspondence_csv(out / "correspondence.csv", corr, scores)
    if corr.shape[0] != Z1.shape[0]:
        raise ValueError("correspondence length must equal source rows")
    keep = scores >= args.min_score if args.min_score is not None \
        else np.ones(corr.shape[0], dtype=bool)
    if not np.any(keep):
        raise ValueError("min-score filter removed every matched pair")
    X, Y = Z1[keep], Z2[corr[keep]]
    center = not args.no_center if args.kind == "orthogonal" else args.center
    amap = fit_orthogonal(X, Y, center=center) if args.kind == "orthogonal" \
        else fit_linear(X, Y, center=center)
    (out / "map.json").write_text(json.dumps(alignment_to_dict(amap)) + "\n",
                                  encoding="utf-8")
    report = {"kind": amap.kind, "fit_residual": amap.fit_residual,
              "underdetermined": amap.underdetermined,
              "matched_rows": int(X.shape[0])}
    (out / "align.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                                    encoding="utf-8")
    write_manifest(out / "align_manifest.json", "align", args.seed or 0, extra=report)
    print(f"fit_residual={amap.fit_residual:.6e}")
    return EXIT_OK


def cmd_stitch(args) -> int:
    encoder = load_mlp(_require(args.encoder))
    decoder = MlpDecoder(load_mlp(_require(args.decoder)))
    amap = alignment_from_dict(json.loads(_require(args.map).read_text(encoding="utf-8")))
    X = read_embedding(_require(args.data))
    stitched = stitch(encoder, amap, decoder, X)
    out = _out_dir(args)
    write_embedding(out / "stitched.rgem", stitched)
    reference = read_embedding(_require(args.reference)) if args.reference else X
    mse = reconstruction_mse(stitched, reference)
    report = {"mse_vs_reference": mse, "rows": int(X.shape[0])}
    (out / "stitch.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                                     encoding="utf-8")
    write_manifest(out / "stitch_manifest.json", "stitch", args.seed or 0, extra=report)
    print(f"mse={mse:.6e}")
    return EXIT_OK


def cmd_anchor_sweep(args) -> int:
    Z1 = read_embedding(_require(args.latents1))
    Z2 = read_embedding(_require(args.latents2))
    dec1 = MlpDecoder(load_mlp(_require(args.decoder1)))
    dec2 = MlpDecoder(load_mlp(_require(args.decoder2)))
    metric = metric_from_name(args.metric)
    seed = args.seed if args.seed is not None else 0
    k_list = [int(k) for k in args.k_list.split(",")]
    gt = np.arange(Z1.shape[0])

    rows = []
    summary = []
    for k in k_list:
        geo_scores, cos_scores = [], []
        for rep in range(args.repeats):
            stream = RngStream(seed).split(f"anchors:k-{k}:rep-{rep}")
            anchors1 = select_anchors(Z1, k, args.scheme, stream)
            anchors2 = anchors_from_indices(Z2, anchors1.indices, anchors1.scheme)
            rel1 = relrep_geodesic(Z1, anchors1, dec1, metric,
                                   steps=args.steps, mode=args.mode)
            rel2 = relrep_geodesic(Z2, anchors2, dec2, metric,
                                   steps=args.steps, mode=args.mode)
            geo = mrr(crossspace_similarity(rel1, rel2), gt).mrr
            cos = mrr(crossspace_similarity(relrep_cosine(Z1, anchors1),
                                            relrep_cosine(Z2, anchors2)), gt).mrr
            geo_scores.append(geo)
            cos_scores.append(cos)
            rows.append((k, rep, geo, cos))
        summary.append((k,
                        float(np.mean(geo_scores)), float(np.std(geo_scores)),
                        float(np.mean(cos_scores)), float(np.std(cos_scores))))

    out = _out_dir(args)
    write_csv(out / "sweep.csv",
              ["k", "repeat", "mrr_relgeo", "mrr_cosine"], rows)
    write_csv(out / "sweep_summary.csv",
              ["k", "mean_relgeo", "std_relgeo", "mean_cosine", "std_cosine"],
              summary)
    write_manifest(out / "anchor_sweep_manifest.json", "anchor_sweep", seed,
                   extra={"k_list": k_list, "repeats": args.repeats,
                          "mode": args.mode, "metric": args.metric})
    for k, mean_geo, _, mean_cos, _ in summary:
        print(f"k={k} mrr_relgeo={mean_geo:.6f} mrr_cosine={mean_cos:.6f}")
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (env RELGEO_THREADS as fallback)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relgeo",
                                     description="relative geodesic representation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--config", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train-ae", help="train an MLP autoencoder")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True, help="data_x.rgem")
    p.add_argument("--model-index", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=cmd_train_ae)

    p = sub.add_parser("train-diet", help="train an instance-discrimination head")
    p.add_argument("--config", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--model-index", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=cmd_train_diet)

    p = sub.add_parser("relrep", help="build a relative representation matrix")
    p.add_argument("--latents", required=True)
    p.add_argument("--name", default="relrep")
    p.add_argument("--mode", default="geo-length",
                   choices=["cosine", "geo-length", "geo-energy"])
    p.add_argument("--metric", default="euclidean",
                   choices=["euclidean", "spherical", "fisher_rao"])
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--decoder", default=None)
    p.add_argument("--anchors", type=int, default=8)
    p.add_argument("--scheme", default="uniform",
                   choices=["uniform", "fps", "kmeans"])
    p.add_argument("--anchor-indices", default=None,
                   help="CSV of anchor_index rows to reuse an existing draw")
    _add_common(p)
    p.set_defaults(func=cmd_relrep)

    p = sub.add_parser("geodesic-compare",
                       help="straight-line vs oracle energies with Spearman report")
    p.add_argument("--decoder", required=True)
    p.add_argument("--latents", required=True)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--metric", default="euclidean",
                   choices=["euclidean", "spherical", "fisher_rao"])
    p.add_argument("--oracle-steps", type=int, default=16)
    p.add_argument("--oracle-iters", type=int, default=500)
    p.add_argument("--oracle-lr", type=float, default=1e-2)
    _add_common(p)
    p.set_defaults(func=cmd_geodesic_compare)

    p = sub.add_parser("retrieve", help="cross-space retrieval MRR")
    p.add_argument("--relrep1", default=None)
    p.add_argument("--relrep2", default=None)
    p.add_argument("--latents1", default=None)
    p.add_argument("--latents2", default=None)
    p.add_argument("--decoder1", default=None)
    p.add_argument("--decoder2", default=None)
    p.add_argument("--mode", default="cosine",
                   choices=["cosine", "geo-length", "geo-energy"])
    p.add_argument("--metric", default="euclidean",
                   choices=["euclidean", "spherical", "fisher_rao"])
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--anchors", type=int, default=8)
    p.add_argument("--scheme", default="uniform",
                   choices=["uniform", "fps", "kmeans"])
    p.add_argument("--anchor-indices", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("align", help="fit a latent-space alignment map")
    p.add_argument("--source", required=True, help="source latents .rgem")
    p.add_argument("--target", required=True, help="target latents .rgem")
    p.add_argument("--correspondence", default=None)
    p.add_argument("--relrep1", default=None)
    p.add_argument("--relrep2", default=None)
    p.add_argument("--kind", default="linear", choices=["linear", "orthogonal"])
    p.add_argument("--center", action="store_true",
                   help="mean-center before a linear fit")
    p.add_argument("--no-center", action="store_true",
                   help="skip centering for an orthogonal fit")
    p.add_argument("--min-score", type=float, default=None,
                   help="drop matched pairs whose similarity is below this")
    _add_common(p)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("stitch", help="decode one model's codes with another model")
    p.add_argument("--encoder", required=True)
    p.add_argument("--map", required=True)
    p.add_argument("--decoder", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--reference", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_stitch)

    p = sub.add_parser("anchor-sweep", help="MRR as a function of anchor count")
    p.add_argument("--latents1", required=True)
    p.add_argument("--latents2", required=True)
    p.add_argument("--decoder1", required=True)
    p.add_argument("--decoder2", required=True)
    p.add_argument("--k-list", default="5,10,20,50")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--mode", default="length", choices=["length", "energy"])
    p.add_argument("--metric", default="euclidean",
                   choices=["euclidean", "spherical", "fisher_rao"])
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--scheme", default="uniform",
                   choices=["uniform", "fps", "kmeans"])
    _add_common(p)
    p.set_defaults(func=cmd_anchor_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except (EmbeddingFormatError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_FILE


if __name__ == "__main__":
    sys.exit(main())
