/**
 * Array-in/array-out bindings over the obbkit command-line interface.
 *
 * Boxes travel as [cx, cy, w, h, theta] rows (pixels / radians); every
 * function is stateless and returns plain arrays. All numbers cross the
 * boundary as shortest round-trip decimals, so double-precision outputs
 * match the core bit for bit.
 */

import {
  BoundaryValidationError,
  num,
  parseTsv,
  requireColumns,
  runCli,
  toTsv,
  withScratchDir,
  writeScratch,
} from "./runner.js";

export {
  BoundaryValidationError,
  CoreProcessError,
  SingularRowsError,
} from "./runner.js";

export type Box = [number, number, number, number, number];
export type DecodeVariant = "paper-literal" | "rotation-matrix";

export interface FeatureMapData {
  /** image pixels per feature cell */
  stride: number;
  /** [channels][height][width] */
  data: number[][][];
}

export interface MatchPair {
  predIndex: number;
  gtIndex: number;
  clsCost: number;
  l1Cost: number;
  iouCost: number;
  total: number;
}

export interface MatchOptions {
  lambdaCls?: number;
  lambdaL1?: number;
  lambdaIou?: number;
  imageW?: number;
  imageH?: number;
}

export interface GroundTruthInput {
  box: Box;
  imageId: string;
  scene?: "inshore" | "offshore" | "unspecified";
}

export interface PredictionInput {
  box: Box;
  score: number;
  imageId: string;
}

export interface SplitCounts {
  nTp: number;
  nGt: number;
  nDet: number;
}

export interface EvalResult {
  ap50: number;
  ap50Inshore: number;
  ap50Offshore: number;
  overall: SplitCounts;
  inshore: SplitCounts;
  offshore: SplitCounts;
}

function checkBoxes(rows: readonly (readonly number[])[], label: string): void {
  requireColumns(rows, 5, label);
}

/** Pairwise rotated IoU: (n, 5) x (m, 5) -> (n, m). */
export function boundRotatedIou(a: number[][], b: number[][]): number[][] {
  checkBoxes(a, "boxes a");
  checkBoxes(b, "boxes b");
  if (a.length === 0 || b.length === 0) {
    return a.map(() => []);
  }
  return withScratchDir((dir) => {
    const fa = writeScratch(dir, "a.tsv", toTsv(a));
    const fb = writeScratch(dir, "b.tsv", toTsv(b));
    const out = runCli(["iou", "--file-a", fa, "--file-b", fb]);
    return parseTsv(out);
  });
}

function runDeltaOp(
  subcommand: "decode" | "encode",
  firstFlag: string,
  secondFlag: string,
  first: number[][],
  second: number[][],
  variant: DecodeVariant,
): number[][] {
  checkBoxes(first, "boxes");
  requireColumns(second, 5, subcommand === "decode" ? "deltas" : "targets");
  if (first.length !== second.length) {
    throw new BoundaryValidationError(
      `row count mismatch: ${first.length} vs ${second.length}`,
    );
  }
  if (first.length === 0) {
    return [];
  }
  return withScratchDir((dir) => {
    const fa = writeScratch(dir, "first.tsv", toTsv(first));
    const fb = writeScratch(dir, "second.tsv", toTsv(second));
    const out = runCli([
      subcommand, firstFlag, fa, secondFlag, fb, "--decode", variant,
    ]);
    return parseTsv(out);
  });
}

/** Apply regression deltas to proposal boxes; rows map one to one. */
export function boundDecode(
  boxes: number[][],
  deltas: number[][],
  variant: DecodeVariant = "paper-literal",
): number[][] {
  return runDeltaOp("decode", "--boxes", "--deltas", boxes, deltas, variant);
}

/**
 * Invert the delta transform. Under "paper-literal" the center map is
 * singular near theta = +/- pi/4; offending rows surface as a
 * SingularRowsError carrying their indices.
 */
export function boundEncode(
  boxes: number[][],
  targets: number[][],
  variant: DecodeVariant = "paper-literal",
): number[][] {
  return runDeltaOp("encode", "--boxes", "--targets", boxes, targets, variant);
}

/** Hungarian assignment under the composite focal/L1/IoU cost. */
export function boundMatch(
  predBoxes: number[][],
  predProbs: number[],
  gtBoxes: number[][],
  options: MatchOptions = {},
): MatchPair[] {
  checkBoxes(predBoxes, "prediction boxes");
  checkBoxes(gtBoxes, "ground-truth boxes");
  if (predProbs.length !== predBoxes.length) {
    throw new BoundaryValidationError(
      `probability count ${predProbs.length} vs ${predBoxes.length} boxes`,
    );
  }
  for (const p of predProbs) {
    if (!(p >= 0 && p <= 1)) {
      throw new BoundaryValidationError(`probability out of [0, 1]: ${p}`);
    }
  }
  if (predBoxes.length === 0 || gtBoxes.length === 0) {
    return [];
  }
  return withScratchDir((dir) => {
    const gtLines = gtBoxes
      .map((b) =>
        JSON.stringify({
          image_id: "0", cx: b[0], cy: b[1], w: b[2], h: b[3], theta: b[4],
          class_id: 0, scene: "unspecified",
        }),
      )
      .join("\n");
    const predLines = predBoxes
      .map((b, i) =>
        JSON.stringify({
          image_id: "0", cx: b[0], cy: b[1], w: b[2], h: b[3], theta: b[4],
          class_id: 0, score: predProbs[i],
        }),
      )
      .join("\n");
    const gtPath = writeScratch(dir, "m.gt.jsonl", gtLines + "\n");
    const predPath = writeScratch(dir, "m.pred.jsonl", predLines + "\n");
    const args = ["match", "--gt", gtPath, "--pred", predPath];
    if (options.lambdaCls !== undefined) {
      args.push("--lambda-cls", num(options.lambdaCls));
    }
    if (options.lambdaL1 !== undefined) {
      args.push("--lambda-l1", num(options.lambdaL1));
    }
    if (options.lambdaIou !== undefined) {
      args.push("--lambda-iou", num(options.lambdaIou));
    }
    args.push("--image-w", num(options.imageW ?? 512));
    args.push("--image-h", num(options.imageH ?? 512));
    const out = runCli(args);
    const pairs: MatchPair[] = [];
    for (const line of out.split("\n")) {
      if (line.trim().length === 0) continue;
      const parts = line.split("\t");
      pairs.push({
        predIndex: Number.parseInt(parts[1], 10),
        gtIndex: Number.parseInt(parts[2], 10),
        clsCost: Number.parseFloat(parts[3]),
        l1Cost: Number.parseFloat(parts[4]),
        iouCost: Number.parseFloat(parts[5]),
        total: Number.parseFloat(parts[6]),
      });
    }
    return pairs;
  });
}

/** Rotated RoIAlign: pool each box into [channels][outH][outW]. */
export function boundRoiAlign(
  map: FeatureMapData,
  boxes: number[][],
  outH = 7,
  outW = 7,
  samplingRatio = 2,
): number[][][][] {
  checkBoxes(boxes, "boxes");
  const channels = map.data.length;
  if (channels === 0 || map.data[0].length === 0) {
    throw new BoundaryValidationError("feature map must be non-empty");
  }
  const height = map.data[0].length;
  const width = map.data[0][0].length;
  const flat: number[] = [];
  for (const plane of map.data) {
    if (plane.length !== height) {
      throw new BoundaryValidationError("ragged feature map rows");
    }
    for (const row of plane) {
      if (row.length !== width) {
        throw new BoundaryValidationError("ragged feature map columns");
      }
      for (const v of row) flat.push(v);
    }
  }
  if (boxes.length === 0) {
    return [];
  }
  return withScratchDir((dir) => {
    const mapPath = writeScratch(
      dir,
      "map.json",
      JSON.stringify({
        stride: map.stride,
        shape: [channels, height, width],
        data: flat,
      }),
    );
    const boxPath = writeScratch(dir, "boxes.tsv", toTsv(boxes));
    const out = runCli([
      "roialign", "--map", mapPath, "--boxes", boxPath,
      "--out-h", String(outH), "--out-w", String(outW),
      "--sampling-ratio", String(samplingRatio),
    ]);
    const doc = JSON.parse(out) as { shape: number[]; data: number[] };
    const [n, c, oh, ow] = doc.shape;
    const result: number[][][][] = [];
    let k = 0;
    for (let i = 0; i < n; i++) {
      const perBox: number[][][] = [];
      for (let ch = 0; ch < c; ch++) {
        const grid: number[][] = [];
        for (let y = 0; y < oh; y++) {
          grid.push(doc.data.slice(k, k + ow));
          k += ow;
        }
        perBox.push(grid);
      }
      result.push(perBox);
    }
    return result;
  });
}

/** Rotated-AP50 report with inshore/offshore splits. */
export function boundEvaluate(
  gts: GroundTruthInput[],
  preds: PredictionInput[],
  iouThresh = 0.5,
  method: "all-points" | "eleven-point" = "all-points",
): EvalResult {
  checkBoxes(gts.map((g) => g.box), "ground-truth boxes");
  checkBoxes(preds.map((p) => p.box), "prediction boxes");
  return withScratchDir((dir) => {
    const gtLines = gts
      .map((g) =>
        JSON.stringify({
          image_id: g.imageId, cx: g.box[0], cy: g.box[1], w: g.box[2],
          h: g.box[3], theta: g.box[4], class_id: 0,
          scene: g.scene ?? "unspecified",
        }),
      )
      .join("\n");
    const predLines = preds
      .map((p) =>
        JSON.stringify({
          image_id: p.imageId, cx: p.box[0], cy: p.box[1], w: p.box[2],
          h: p.box[3], theta: p.box[4], class_id: 0, score: p.score,
        }),
      )
      .join("\n");
    const gtPath = writeScratch(dir, "e.gt.jsonl", gtLines + "\n");
    const predPath = writeScratch(dir, "e.pred.jsonl", predLines + "\n");
    const out = runCli([
      "eval", "--gt", gtPath, "--pred", predPath,
      "--iou-thresh", num(iouThresh), "--method", method,
    ]);
    const fields = new Map<string, string>();
    for (const line of out.split("\n")) {
      if (line.trim().length === 0) continue;
      const tab = line.indexOf("\t");
      fields.set(line.slice(0, tab), line.slice(tab + 1));
    }
    const f = (k: string) => Number.parseFloat(fields.get(k) ?? "NaN");
    const i = (k: string) => Number.parseInt(fields.get(k) ?? "NaN", 10);
    return {
      ap50: f("ap50"),
      ap50Inshore: f("ap50_inshore"),
      ap50Offshore: f("ap50_offshore"),
      overall: { nTp: i("n_tp"), nGt: i("n_gt"), nDet: i("n_det") },
      inshore: {
        nTp: i("n_tp_inshore"), nGt: i("n_gt_inshore"),
        nDet: i("n_det_inshore"),
      },
      offshore: {
        nTp: i("n_tp_offshore"), nGt: i("n_gt_offshore"),
        nDet: i("n_det_offshore"),
      },
    };
  });
}

/** Core library version; the bindings mirror it. */
export function version(): string {
  return runCli(["--version"]).trim();
}
