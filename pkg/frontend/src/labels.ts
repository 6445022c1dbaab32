/** Label taxonomy and the pinned colour assignments for all panels. */

export const PRIMARY_LABELS = ["FIXATION", "SACCADE", "SP", "NOISE", "UNLABELLED"] as const;
export const SECONDARY_LABELS = ["NONE", "VOR", "OKN", "OKN_VOR", "HEAD_PURSUIT"] as const;

export type PrimaryLabel = (typeof PRIMARY_LABELS)[number];
export type SecondaryLabel = (typeof SECONDARY_LABELS)[number];

export const PRIMARY_COLORS: Record<PrimaryLabel, string> = {
  FIXATION: "#4c9f70",
  SACCADE: "#d1495b",
  SP: "#3a7ca5",
  NOISE: "#8d8d8d",
  UNLABELLED: "#e8e4d8",
};

export const SECONDARY_COLORS: Record<SecondaryLabel, string> = {
  NONE: "#f4f2ec",
  VOR: "#e0a24b",
  OKN: "#7b5ea7",
  OKN_VOR: "#b05cb8",
  HEAD_PURSUIT: "#2e8f8f",
};

/** Keyboard assignments; remap by editing this table. */
export const PRIMARY_KEYS: Record<string, PrimaryLabel> = {
  f: "FIXATION",
  s: "SACCADE",
  p: "SP",
  n: "NOISE",
  u: "UNLABELLED",
};

export const SECONDARY_KEYS: Record<string, SecondaryLabel> = {
  v: "VOR",
  o: "OKN",
  k: "OKN_VOR",
  h: "HEAD_PURSUIT",
  x: "NONE",
};

/** Stage-2 shortcut: rewrite a stage-1 pursuit of a world-stationary target. */
export const SP_TO_FIXATION_KEY = "g";
export const MODE_SWITCH_KEY = "m";
export const UNDO_KEY = "z";
export const TIER_OVERRIDE_KEY = "t";
