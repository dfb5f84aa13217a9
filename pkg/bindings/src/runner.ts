import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

/** An input failed validation before reaching the core process. */
export class BoundaryValidationError extends Error {}

/** The paper-literal encoder was singular on these row indices. */
export class SingularRowsError extends Error {
  readonly rows: number[];
  constructor(message: string, rows: number[]) {
    super(message);
    this.rows = rows;
  }
}

/** The core process failed in a way the bindings do not model. */
export class CoreProcessError extends Error {
  readonly exitCode: number | null;
  constructor(message: string, exitCode: number | null) {
    super(message);
    this.exitCode = exitCode;
  }
}

function interpreter(): string {
  return process.env.OBBKIT_PYTHON ?? "python3";
}

const SINGULAR_MARKER = "singular rows:";

export function runCli(args: string[]): string {
  const proc = spawnSync(interpreter(), ["-m", "obbkit", ...args], {
    encoding: "utf-8",
    maxBuffer: 1 << 28,
  });
  if (proc.error) {
    throw new CoreProcessError(String(proc.error), null);
  }
  if (proc.status !== 0) {
    const err = proc.stderr ?? "";
    const at = err.indexOf(SINGULAR_MARKER);
    if (at >= 0) {
      const list = err.slice(at + SINGULAR_MARKER.length).trim();
      const rows = list
        .split(",")
        .map((s) => Number.parseInt(s, 10))
        .filter((v) => Number.isInteger(v));
      throw new SingularRowsError(err.trim(), rows);
    }
    if (proc.status === 2) {
      throw new BoundaryValidationError(err.trim());
    }
    throw new CoreProcessError(err.trim(), proc.status);
  }
  return proc.stdout;
}

/** Scratch directory scoped to one CLI exchange. */
export function withScratchDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "obbkit-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

export function writeScratch(dir: string, name: string, text: string): string {
  const path = join(dir, name);
  writeFileSync(path, text, "utf-8");
  return path;
}

/** Full-precision decimal: JS prints the shortest round-trip form. */
export function num(v: number): string {
  if (!Number.isFinite(v)) {
    throw new BoundaryValidationError(`non-finite value: ${v}`);
  }
  return String(v);
}

export function requireColumns(
  rows: readonly (readonly number[])[],
  width: number,
  label: string,
): void {
  for (const row of rows) {
    if (row.length !== width) {
      throw new BoundaryValidationError(
        `${label}: expected ${width} columns, got ${row.length}`,
      );
    }
  }
}

export function toTsv(rows: readonly (readonly number[])[]): string {
  return rows.map((row) => row.map(num).join("\t") + "\n").join("");
}

export function parseTsv(text: string): number[][] {
  const out: number[][] = [];
  for (const line of text.split("\n")) {
    if (line.trim().length === 0) continue;
    out.push(line.split("\t").map(Number.parseFloat));
  }
  return out;
}
