/**
 * Annotation tool wiring: frame list, brush tools, linked threshold
 * sliders, color modes, prediction overlay, and save with a dirty
 * indicator. Every label change shown comes from an accepted server
 * response; conflicts reload the frame and show a banner.
 */

import { ApiClient, UNLABELED } from "./api.js";
import { colorize, recolorIndices } from "./colors.js";
import { seedsFromPicks } from "./picking.js";
import { AnnotationSession, ColorMode, Tool } from "./state.js";
import { CloudViewer } from "./viewer.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const banner = $("banner");

function showBanner(text: string, kind: "error" | "info"): void {
  banner.textContent = text;
  banner.className = `banner ${kind}`;
  banner.style.display = "block";
  window.setTimeout(() => (banner.style.display = "none"), 4000);
}

let session: AnnotationSession | null = null;
let colors: Float32Array = new Float32Array(0);
let tool: Tool = "seed_brush";
let colorMode: ColorMode = "by_label";

const api = () => new ApiClient(($("server-url") as HTMLInputElement).value);

const viewer = new CloudViewer($("canvas") as HTMLCanvasElement, {
  strokeEnd: (picked) => void onStroke(picked),
});

function repaintAll(): void {
  if (!session?.cloud) return;
  colors = colorize(session.cloud, session.labels, colorMode, session.prediction, colors);
  viewer.updateColors(colors);
}

async function onStroke(picked: number[]): Promise<void> {
  if (!session?.cloud) return;
  if (tool === "seed_brush") {
    const seeds = seedsFromPicks(session.cloud, picked);
    await session.strokeSeeds(seeds);
  } else {
    const value = Number(($("toggle-value") as HTMLSelectElement).value);
    await session.strokeToggle(picked, value);
  }
}

async function loadFrame(frameId: string): Promise<void> {
  session = new AnnotationSession(api(), frameId, {
    labelsChanged: (indices) => {
      if (colorMode === "by_label" && session) {
        recolorIndices(colors, session.labels, indices);
        viewer.updateColors(colors);
      } else {
        repaintAll();
      }
    },
    conflict: () => showBanner("conflict: another tab changed this frame; reloaded", "error"),
    dirtyChanged: (dirty) => {
      $("save").classList.toggle("dirty", dirty);
    },
    error: (message) => showBanner(message, "error"),
  });
  try {
    await session.load();
  } catch (err) {
    showBanner(`could not load ${frameId}: ${err}`, "error");
    session = null;
    return;
  }
  const { t1, t2 } = session.thresholds;
  ($("t1") as HTMLInputElement).value = String(t1);
  ($("t2") as HTMLInputElement).value = String(t2);
  syncThresholdText();
  colors = colorize(session.cloud!, session.labels, colorMode, null);
  viewer.setCloud(session.cloud!, colors);
}

async function refreshFrames(): Promise<void> {
  try {
    const frames = await api().listFrames();
    const select = $("frame") as HTMLSelectElement;
    select.innerHTML = "";
    for (const f of frames) {
      const option = document.createElement("option");
      option.value = f.frame_id;
      option.textContent =
        `${f.frame_id} (${f.point_count} pts, ${(f.labeled_fraction * 100).toFixed(0)}% labeled)`;
      select.appendChild(option);
    }
    if (frames.length > 0) await loadFrame(frames[0].frame_id);
  } catch (err) {
    showBanner(`server unreachable: ${err}`, "error");
  }
}

function syncThresholdText(): void {
  if (!session) return;
  $("t1-value").textContent = session.thresholds.t1.toFixed(3);
  $("t2-value").textContent = session.thresholds.t2.toFixed(3);
}

function onThreshold(moved: "t1" | "t2"): void {
  if (!session) return;
  const t1 = Number(($("t1") as HTMLInputElement).value);
  const t2 = Number(($("t2") as HTMLInputElement).value);
  const clamped = session.setThresholds(t1, t2, moved);
  ($("t1") as HTMLInputElement).value = String(clamped.t1);
  ($("t2") as HTMLInputElement).value = String(clamped.t2);
  syncThresholdText();
}

$("connect").addEventListener("click", () => void refreshFrames());
$("frame").addEventListener("change", (e) =>
  void loadFrame((e.target as HTMLSelectElement).value));
$("t1").addEventListener("input", () => onThreshold("t1"));
$("t2").addEventListener("input", () => onThreshold("t2"));

for (const value of ["seed_brush", "toggle_brush", "orbit"]) {
  $(`tool-${value}`).addEventListener("click", () => {
    tool = value === "toggle_brush" ? "toggle_brush" : "seed_brush";
    viewer.setBrushing(value !== "orbit");
    for (const other of ["seed_brush", "toggle_brush", "orbit"]) {
      $(`tool-${other}`).classList.toggle("active", other === value);
    }
  });
}

$("color-mode").addEventListener("change", (e) => {
  colorMode = (e.target as HTMLSelectElement).value as ColorMode;
  repaintAll();
});

$("save").addEventListener("click", () => {
  void session?.save().then(
    () => showBanner("saved", "info"),
    () => undefined, // session events already showed the reason
  );
});

$("show-prediction").addEventListener("click", () => {
  const path = ($("model-path") as HTMLInputElement).value;
  if (!session || !path) return;
  void session.showPrediction(path).then(
    () => {
      ($("color-mode") as HTMLSelectElement).value = "by_prediction";
      colorMode = "by_prediction";
      repaintAll();
    },
    (err) => showBanner(`prediction failed: ${err}`, "error"),
  );
});

void refreshFrames();
export { UNLABELED };
