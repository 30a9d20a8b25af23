// Append-only record of solved prompts, and measurement diffs between runs.

export interface RunRecord {
  id: number;
  prompt: string;
  at: number;
  beta: number[];
  measurements: Record<string, number>;
  labels: Record<string, string>;
  satisfied: boolean;
}

export interface MeasurementDelta {
  name: string;
  before: number;
  after: number;
  delta: number;
  beforeLabel: string;
  afterLabel: string;
}

export class RunHistory {
  private readonly runs: RunRecord[] = [];
  private nextId = 1;

  add(run: Omit<RunRecord, "id" | "at">, at: number = Date.now()): RunRecord {
    const record: RunRecord = Object.freeze({ ...run, id: this.nextId++, at });
    this.runs.push(record);
    return record;
  }

  all(): readonly RunRecord[] {
    return this.runs.slice();
  }

  get size(): number {
    return this.runs.length;
  }

  get(id: number): RunRecord {
    const found = this.runs.find((r) => r.id === id);
    if (!found) throw new Error(`no run with id ${id}`);
    return found;
  }

  latest(): RunRecord | null {
    return this.runs.length ? this.runs[this.runs.length - 1] : null;
  }

  /** The two most recent runs as a (before, after) pair. */
  latestPair(): [RunRecord, RunRecord] | null {
    if (this.runs.length < 2) return null;
    return [this.runs[this.runs.length - 2], this.runs[this.runs.length - 1]];
  }

  /** Per-measurement differences, after minus before. */
  compare(beforeId: number, afterId: number): MeasurementDelta[] {
    const before = this.get(beforeId);
    const after = this.get(afterId);
    const names = Object.keys(before.measurements);
    return names.map((name) => ({
      name,
      before: before.measurements[name],
      after: after.measurements[name],
      delta: after.measurements[name] - before.measurements[name],
      beforeLabel: before.labels[name] ?? "",
      afterLabel: after.labels[name] ?? "",
    }));
  }
}
