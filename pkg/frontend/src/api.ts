/**
 * Typed client for the annotation server.
 *
 * The cloud endpoint streams a 16-byte header (magic "GSC1", u32 version,
 * u32 point count, 4 reserved bytes), then 20-byte XYZIR float32 records,
 * then one label byte per point.
 */

export interface FrameInfo {
  frame_id: string;
  point_count: number;
  labeled_fraction: number;
}

export interface Cloud {
  count: number;
  forward: Float32Array;
  left: Float32Array;
  up: Float32Array;
  intensity: Float32Array;
  ring: Int32Array;
}

export interface FloodResult {
  changed_point_indices: number[];
  new_revision: number;
}

export const NON_GROUND = 0;
export const GROUND = 1;
export const UNLABELED = 255;

export class ConflictError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ConflictError";
  }
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

async function expectOk(response: Response): Promise<Response> {
  if (response.status === 409) {
    throw new ConflictError(await response.text());
  }
  if (!response.ok) {
    throw new ApiError(response.status, `${response.status}: ${await response.text()}`);
  }
  return response;
}

export function parseCloudStream(buffer: ArrayBuffer): { cloud: Cloud; labels: Uint8Array } {
  const view = new DataView(buffer);
  const magic = String.fromCharCode(view.getUint8(0), view.getUint8(1), view.getUint8(2), view.getUint8(3));
  if (magic !== "GSC1") {
    throw new Error(`bad cloud stream magic ${magic}`);
  }
  const version = view.getUint32(4, true);
  if (version !== 1) {
    throw new Error(`unsupported cloud stream version ${version}`);
  }
  const count = view.getUint32(8, true);
  if (buffer.byteLength !== 16 + 21 * count) {
    throw new Error(`cloud stream length ${buffer.byteLength} != ${16 + 21 * count}`);
  }
  const cloud: Cloud = {
    count,
    forward: new Float32Array(count),
    left: new Float32Array(count),
    up: new Float32Array(count),
    intensity: new Float32Array(count),
    ring: new Int32Array(count),
  };
  for (let i = 0; i < count; i++) {
    const off = 16 + 20 * i;
    cloud.forward[i] = view.getFloat32(off, true);
    cloud.left[i] = view.getFloat32(off + 4, true);
    cloud.up[i] = view.getFloat32(off + 8, true);
    cloud.intensity[i] = view.getFloat32(off + 12, true);
    cloud.ring[i] = Math.trunc(view.getFloat32(off + 16, true));
  }
  const labels = new Uint8Array(buffer.slice(16 + 20 * count));
  return { cloud, labels };
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async listFrames(): Promise<FrameInfo[]> {
    const r = await expectOk(await fetch(this.url("/frames")));
    return (await r.json()) as FrameInfo[];
  }

  async fetchCloud(frameId: string): Promise<{ cloud: Cloud; labels: Uint8Array; revision: number }> {
    const r = await expectOk(await fetch(this.url(`/frames/${frameId}/cloud`)));
    const revision = Number(r.headers.get("X-Revision") ?? "0");
    const { cloud, labels } = parseCloudStream(await r.arrayBuffer());
    return { cloud, labels, revision };
  }

  async flood(
    frameId: string,
    seeds: Array<[number, number]>,
    t1: number,
    t2: number,
    revision: number,
  ): Promise<FloodResult> {
    const r = await expectOk(
      await fetch(this.url(`/frames/${frameId}/flood`), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ seeds, t1, t2, revision }),
      }),
    );
    return (await r.json()) as FloodResult;
  }

  async toggle(frameId: string, indices: number[], value: number, revision: number): Promise<FloodResult> {
    const r = await expectOk(
      await fetch(this.url(`/frames/${frameId}/toggle`), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ indices, value, revision }),
      }),
    );
    return (await r.json()) as FloodResult;
  }

  async save(frameId: string, revision: number): Promise<void> {
    await expectOk(
      await fetch(this.url(`/frames/${frameId}/labels`), {
        method: "PUT",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ revision }),
      }),
    );
  }

  async prediction(frameId: string, modelPath: string): Promise<Float64Array> {
    const query = new URLSearchParams({ model: modelPath });
    const r = await expectOk(await fetch(this.url(`/frames/${frameId}/prediction?${query}`)));
    const doc = (await r.json()) as { scores: number[] };
    return Float64Array.from(doc.scores);
  }
}
