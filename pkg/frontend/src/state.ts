/**
 * Frame annotation session: the single source of truth on the client.
 *
 * Labels mirror the server at the tracked revision; strokes become flood /
 * toggle requests that queue client-side so at most one mutation is in
 * flight. A stale-revision rejection reloads the frame and surfaces a
 * conflict notice instead of guessing.
 */

import { ApiClient, Cloud, ConflictError, GROUND } from "./api.js";

export type Tool = "seed_brush" | "toggle_brush";
export type ColorMode = "by_label" | "by_height" | "by_intensity" | "by_prediction";

export interface Thresholds {
  t1: number;
  t2: number;
}

/** Keep 0 < t1 <= t2 the way linked sliders would. */
export function clampThresholds(t1: number, t2: number, moved: "t1" | "t2"): Thresholds {
  t1 = Math.max(0.001, t1);
  t2 = Math.max(0.001, t2);
  if (t1 > t2) {
    if (moved === "t1") t2 = t1;
    else t1 = t2;
  }
  return { t1, t2 };
}

export interface SessionEvents {
  labelsChanged?: (indices: number[]) => void;
  conflict?: (message: string) => void;
  dirtyChanged?: (dirty: boolean) => void;
  error?: (message: string) => void;
}

export class AnnotationSession {
  cloud: Cloud | null = null;
  labels: Uint8Array = new Uint8Array(0);
  revision = 0;
  dirty = false;
  thresholds: Thresholds = { t1: 0.03, t2: 0.07 };
  prediction: Float64Array | null = null;

  private queue: Promise<void> = Promise.resolve();

  constructor(
    private readonly api: ApiClient,
    readonly frameId: string,
    private readonly events: SessionEvents = {},
  ) {}

  async load(): Promise<void> {
    const { cloud, labels, revision } = await this.api.fetchCloud(this.frameId);
    this.cloud = cloud;
    this.labels = labels;
    this.revision = revision;
    this.setDirty(false);
  }

  setThresholds(t1: number, t2: number, moved: "t1" | "t2" = "t2"): Thresholds {
    // prospective only: affects future strokes, never re-floods old ones
    this.thresholds = clampThresholds(t1, t2, moved);
    return this.thresholds;
  }

  /** Seed stroke: one flood request per stroke with the current thresholds. */
  strokeSeeds(seeds: Array<[number, number]>): Promise<void> {
    if (seeds.length === 0) return this.queue;
    return this.enqueue(async () => {
      const result = await this.api.flood(
        this.frameId, seeds, this.thresholds.t1, this.thresholds.t2, this.revision);
      this.applyChanged(result.changed_point_indices, GROUND, result.new_revision);
    });
  }

  strokeToggle(indices: number[], value: number): Promise<void> {
    if (indices.length === 0) return this.queue;
    return this.enqueue(async () => {
      const result = await this.api.toggle(this.frameId, indices, value, this.revision);
      this.applyChanged(result.changed_point_indices, value, result.new_revision);
    });
  }

  save(): Promise<void> {
    return this.enqueue(async () => {
      await this.api.save(this.frameId, this.revision);
      this.setDirty(false);
    });
  }

  async showPrediction(modelPath: string): Promise<void> {
    this.prediction = await this.api.prediction(this.frameId, modelPath);
  }

  private enqueue(work: () => Promise<void>): Promise<void> {
    const next = this.queue.then(async () => {
      try {
        await work();
      } catch (err) {
        if (err instanceof ConflictError) {
          await this.load();
          this.events.conflict?.(err.message);
          return;
        }
        this.events.error?.(err instanceof Error ? err.message : String(err));
        throw err;
      }
    });
    // keep the chain alive after failures so later strokes still run
    this.queue = next.catch(() => undefined);
    return next;
  }

  private applyChanged(indices: number[], value: number, newRevision: number): void {
    for (const i of indices) {
      this.labels[i] = value;
    }
    this.revision = newRevision;
    if (indices.length > 0) {
      this.setDirty(true);
      this.events.labelsChanged?.(indices);
    }
  }

  private setDirty(dirty: boolean): void {
    if (dirty !== this.dirty) {
      this.dirty = dirty;
      this.events.dirtyChanged?.(dirty);
    }
  }
}
