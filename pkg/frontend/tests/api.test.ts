import { describe, expect, it, vi, afterEach } from "vitest";

import { ApiClient, ConflictError, GROUND, parseCloudStream, UNLABELED } from "../src/api.js";

export function buildCloudStream(points: Array<[number, number, number, number, number]>,
                                 labels?: number[]): ArrayBuffer {
  const n = points.length;
  const buf = new ArrayBuffer(16 + 21 * n);
  const view = new DataView(buf);
  [..."GSC1"].forEach((ch, i) => view.setUint8(i, ch.charCodeAt(0)));
  view.setUint32(4, 1, true);
  view.setUint32(8, n, true);
  points.forEach((p, i) => {
    const off = 16 + 20 * i;
    p.forEach((v, j) => view.setFloat32(off + 4 * j, v, true));
  });
  const lab = new Uint8Array(buf, 16 + 20 * n);
  lab.set(labels ?? new Array(n).fill(UNLABELED));
  return buf;
}

describe("parseCloudStream", () => {
  it("decodes header, records, and labels", () => {
    const buf = buildCloudStream(
      [[1, 0, -1.7, 0.5, 3], [0, 2, -1.6, 0.25, 7]],
      [GROUND, UNLABELED],
    );
    const { cloud, labels } = parseCloudStream(buf);
    expect(cloud.count).toBe(2);
    expect(cloud.forward[0]).toBeCloseTo(1);
    expect(cloud.up[0]).toBeCloseTo(-1.7);
    expect(cloud.ring[1]).toBe(7);
    expect([...labels]).toEqual([GROUND, UNLABELED]);
  });

  it("rejects bad magic and truncation", () => {
    const buf = buildCloudStream([[1, 0, 0, 0, 0]]);
    new DataView(buf).setUint8(0, 88);
    expect(() => parseCloudStream(buf)).toThrow(/magic/);
    const short = buildCloudStream([[1, 0, 0, 0, 0]]).slice(0, 30);
    expect(() => parseCloudStream(short)).toThrow(/length/);
  });
});

describe("ApiClient", () => {
  afterEach(() => vi.unstubAllGlobals());

  it("maps 409 to ConflictError", async () => {
    vi.stubGlobal("fetch", vi.fn().mockResolvedValue(
      new Response("stale revision", { status: 409 })));
    const api = new ApiClient("http://x");
    await expect(api.flood("f0", [[0, 0]], 0.03, 0.07, 4))
      .rejects.toBeInstanceOf(ConflictError);
  });

  it("posts the seeds, thresholds, and revision it was given", async () => {
    const fetchMock = vi.fn().mockResolvedValue(new Response(
      JSON.stringify({ changed_point_indices: [1], new_revision: 5 }),
      { status: 200 }));
    vi.stubGlobal("fetch", fetchMock);
    const result = await new ApiClient("http://x/").flood("f0", [[2, 30]], 0.01, 0.02, 4);
    expect(result.new_revision).toBe(5);
    const [url, init] = fetchMock.mock.calls[0];
    expect(url).toBe("http://x/frames/f0/flood");
    expect(JSON.parse(init.body)).toEqual(
      { seeds: [[2, 30]], t1: 0.01, t2: 0.02, revision: 4 });
  });
});
