/** View state and its transitions; all mutation goes through these helpers. */

export type Mode = "FOV" | "E+H";
export type Tier = "primary" | "secondary";

export interface Selection {
  startUs: number;
  endUs: number;
}

export interface ViewState {
  recordingId: string | null;
  mode: Mode;
  windowStartUs: number;
  windowDurUs: number;
  recordingStartUs: number;
  recordingEndUs: number;
  selection: Selection | null;
  /** Editable tier follows the stage: primary in FOV, secondary in E+H. */
  tierOverride: boolean;
  baseRevision: number;
  conflict: boolean;
  error: string | null;
}

export function initialState(): ViewState {
  return {
    recordingId: null,
    mode: "FOV",
    windowStartUs: 0,
    windowDurUs: 5_000_000,
    recordingStartUs: 0,
    recordingEndUs: 0,
    selection: null,
    tierOverride: false,
    baseRevision: 0,
    conflict: false,
    error: null,
  };
}

/** The tier edits apply to: stage 1 (FOV) assigns primary labels, stage 2
 * (E+H) refines the secondary tier; the override toggle swaps that. */
export function activeTier(state: ViewState): Tier {
  const natural: Tier = state.mode === "FOV" ? "primary" : "secondary";
  if (!state.tierOverride) return natural;
  return natural === "primary" ? "secondary" : "primary";
}

export function switchMode(state: ViewState): ViewState {
  return { ...state, mode: state.mode === "FOV" ? "E+H" : "FOV" };
}

function clampUs(state: ViewState, t: number): number {
  return Math.min(Math.max(t, state.recordingStartUs), state.recordingEndUs);
}

export function select(state: ViewState, startUs: number, endUs: number): ViewState {
  const a = clampUs(state, Math.min(startUs, endUs));
  const b = clampUs(state, Math.max(startUs, endUs));
  if (b <= a) return { ...state, selection: null };
  return { ...state, selection: { startUs: a, endUs: b } };
}

export function nudgeSelection(state: ViewState, edge: "start" | "end", deltaUs: number): ViewState {
  if (!state.selection) return state;
  const { startUs, endUs } = state.selection;
  if (edge === "start") {
    const moved = clampUs(state, startUs + deltaUs);
    return moved < endUs ? { ...state, selection: { startUs: moved, endUs } } : state;
  }
  const moved = clampUs(state, endUs + deltaUs);
  return moved > startUs ? { ...state, selection: { startUs, endUs: moved } } : state;
}

export function pan(state: ViewState, deltaUs: number): ViewState {
  const span = state.recordingEndUs - state.recordingStartUs;
  const maxStart = Math.max(state.recordingStartUs, state.recordingEndUs - state.windowDurUs);
  const start = Math.min(
    Math.max(state.windowStartUs + deltaUs, state.recordingStartUs),
    span > 0 ? maxStart : state.recordingStartUs,
  );
  return { ...state, windowStartUs: start };
}

export function zoom(state: ViewState, factor: number): ViewState {
  const dur = Math.max(200_000, Math.round(state.windowDurUs * factor));
  return { ...state, windowDurUs: dur };
}

export function loadedRecording(
  state: ViewState,
  id: string,
  startUs: number,
  endUs: number,
  revision: number,
): ViewState {
  return {
    ...state,
    recordingId: id,
    recordingStartUs: startUs,
    recordingEndUs: endUs,
    windowStartUs: startUs,
    baseRevision: revision,
    selection: null,
    conflict: false,
    error: null,
  };
}
