/** Panel layout as a pure function of (state, fetched data).
 *
 * The layout mirrors the annotation workflow: x and y gaze coordinates over
 * time, a speed panel with gaze speed in black and head speed in red, and
 * two identical secondary-label strips so VOR/head-pursuit bounds can be
 * adjusted against either the speed plot or the coordinates. Coordinate and
 * speed panels colour-code intervals by primary label; the strips show the
 * secondary tier. Rendering to a canvas happens separately in `paint`, so
 * the geometry itself stays testable.
 */

import type { LabelsResponse, SamplesResponse } from "./api.js";
import {
  PRIMARY_COLORS,
  SECONDARY_COLORS,
  type PrimaryLabel,
  type SecondaryLabel,
} from "./labels.js";
import type { Selection, ViewState } from "./state.js";

export interface Polyline {
  color: string;
  /** Normalized [0,1]^2 points within the panel, x along time. */
  points: { x: number; y: number }[];
}

export interface IntervalBand {
  x0: number;
  x1: number;
  color: string;
}

export interface PanelGeometry {
  kind: "x" | "y" | "speed" | "secondary";
  title: string;
  bands: IntervalBand[];
  lines: Polyline[];
  selection: { x0: number; x1: number } | null;
}

const HEAD_SPEED_COLOR = "#c33c3c";
const GAZE_SPEED_COLOR = "#111111";
const SPEED_CEILING = 400; // deg/s, fixed scale so saccades stay readable

function timeToX(state: ViewState, tUs: number): number {
  return (tUs - state.windowStartUs) / state.windowDurUs;
}

function inWindow(state: ViewState, tUs: number): boolean {
  const x = timeToX(state, tUs);
  return x >= 0 && x <= 1;
}

function valueScaler(values: number[]): (v: number) => number {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (Number.isFinite(v)) {
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
  }
  if (!Number.isFinite(lo) || hi - lo < 1e-9) {
    lo = (Number.isFinite(lo) ? lo : 0) - 1;
    hi = lo + 2;
  }
  const span = hi - lo;
  return (v) => 1 - (v - lo) / span;
}

function labelBands(
  state: ViewState,
  tUs: number[],
  labels: string[],
  colors: Record<string, string>,
): IntervalBand[] {
  const bands: IntervalBand[] = [];
  let runStart = -1;
  let runLabel = "";
  for (let i = 0; i <= tUs.length; i++) {
    const label = i < tUs.length ? labels[i]! : "";
    if (label !== runLabel) {
      if (runStart >= 0 && runLabel) {
        const x0 = timeToX(state, tUs[runStart]!);
        const x1 = timeToX(state, i < tUs.length ? tUs[i]! : state.windowStartUs + state.windowDurUs);
        if (x1 > 0 && x0 < 1) {
          bands.push({
            x0: Math.max(0, x0),
            x1: Math.min(1, x1),
            color: colors[runLabel] ?? "#ffffff",
          });
        }
      }
      runStart = i;
      runLabel = label;
    }
  }
  return bands;
}

function selectionBand(state: ViewState): { x0: number; x1: number } | null {
  const sel: Selection | null = state.selection;
  if (!sel) return null;
  const x0 = timeToX(state, sel.startUs);
  const x1 = timeToX(state, sel.endUs);
  if (x1 < 0 || x0 > 1) return null;
  return { x0: Math.max(0, x0), x1: Math.min(1, x1) };
}

function seriesLine(
  state: ViewState,
  tUs: number[],
  values: (number | null)[],
  scale: (v: number) => number,
  color: string,
): Polyline {
  const points: { x: number; y: number }[] = [];
  for (let i = 0; i < tUs.length; i++) {
    const v = values[i];
    if (v === null || v === undefined || !inWindow(state, tUs[i]!)) continue;
    points.push({ x: timeToX(state, tUs[i]!), y: scale(v) });
  }
  return { color, points };
}

export function layoutPanels(
  state: ViewState,
  samples: SamplesResponse,
  labels: LabelsResponse,
): PanelGeometry[] {
  const primaryBands = labelBands(
    state, labels.t_us, labels.primary, PRIMARY_COLORS as Record<string, string>,
  );
  const secondaryBands = labelBands(
    state, labels.t_us, labels.secondary, SECONDARY_COLORS as Record<string, string>,
  );
  const sel = selectionBand(state);
  const frameName = state.mode === "FOV" ? "head frame" : "world frame";

  const xScale = valueScaler(samples.x);
  const yScale = valueScaler(samples.y);
  const speedScale = (v: number) => 1 - Math.min(v, SPEED_CEILING) / SPEED_CEILING;

  const xPanel: PanelGeometry = {
    kind: "x",
    title: `horizontal gaze (${frameName})`,
    bands: primaryBands,
    lines: [seriesLine(state, samples.t_us, samples.x, xScale, GAZE_SPEED_COLOR)],
    selection: sel,
  };
  const yPanel: PanelGeometry = {
    kind: "y",
    title: `vertical gaze (${frameName})`,
    bands: primaryBands,
    lines: [seriesLine(state, samples.t_us, samples.y, yScale, GAZE_SPEED_COLOR)],
    selection: sel,
  };
  const speedPanel: PanelGeometry = {
    kind: "speed",
    title: `speed (${frameName}; gaze black, head red)`,
    bands: primaryBands,
    lines: [
      seriesLine(state, samples.t_us, samples.gaze_speed, speedScale, GAZE_SPEED_COLOR),
      seriesLine(state, samples.t_us, samples.head_speed, speedScale, HEAD_SPEED_COLOR),
    ],
    selection: sel,
  };
  const secondaryPanel = (n: 1 | 2): PanelGeometry => ({
    kind: "secondary",
    title: `secondary labels (${n})`,
    bands: secondaryBands,
    lines: [],
    selection: sel,
  });
  return [xPanel, yPanel, speedPanel, secondaryPanel(1), secondaryPanel(2)];
}

/** Draw one panel's geometry onto a 2D canvas context. */
export function paint(
  ctx: CanvasRenderingContext2D,
  geometry: PanelGeometry,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  for (const band of geometry.bands) {
    ctx.fillStyle = band.color;
    ctx.globalAlpha = geometry.kind === "secondary" ? 0.9 : 0.25;
    ctx.fillRect(band.x0 * width, 0, (band.x1 - band.x0) * width, height);
  }
  ctx.globalAlpha = 1.0;
  for (const line of geometry.lines) {
    if (line.points.length < 2) continue;
    ctx.strokeStyle = line.color;
    ctx.lineWidth = 1.25;
    ctx.beginPath();
    ctx.moveTo(line.points[0]!.x * width, line.points[0]!.y * height);
    for (const p of line.points.slice(1)) {
      ctx.lineTo(p.x * width, p.y * height);
    }
    ctx.stroke();
  }
  if (geometry.selection) {
    ctx.fillStyle = "#2255cc";
    ctx.globalAlpha = 0.18;
    const { x0, x1 } = geometry.selection;
    ctx.fillRect(x0 * width, 0, (x1 - x0) * width, height);
    ctx.globalAlpha = 1.0;
  }
}
