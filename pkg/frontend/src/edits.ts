/** Edit batches: keyboard gestures become atomic server edits with undo. */

import type { ApiClient, LabelEdit, LabelsResponse } from "./api.js";
import { ConflictError } from "./api.js";
import type { PrimaryLabel, SecondaryLabel } from "./labels.js";
import { PRIMARY_KEYS, SECONDARY_KEYS, SP_TO_FIXATION_KEY } from "./labels.js";
import type { Selection, Tier, ViewState } from "./state.js";
import { activeTier } from "./state.js";

export interface AppliedEdit {
  revision: number;
}

/** Batch assigning one label over the selection on the given tier. */
export function labelBatch(
  selection: Selection,
  tier: Tier,
  label: PrimaryLabel | SecondaryLabel,
): LabelEdit[] {
  const edit: LabelEdit = { start_us: selection.startUs, end_us: selection.endUs };
  if (tier === "primary") edit.primary = label as PrimaryLabel;
  else edit.secondary = label as SecondaryLabel;
  return [edit];
}

/** The stage-2 correction: a pursuit that tracked a world-stationary target
 * becomes a fixation with a matching VOR episode, atomically. */
export function spToFixationBatch(selection: Selection): LabelEdit[] {
  return [
    {
      start_us: selection.startUs,
      end_us: selection.endUs,
      primary: "FIXATION",
      secondary: "VOR",
    },
  ];
}

/** Batch restoring the labels currently stored in a range (for undo). */
export function inverseBatch(labels: LabelsResponse, selection: Selection): LabelEdit[] {
  const edits: LabelEdit[] = [];
  let current: LabelEdit | null = null;
  for (let i = 0; i < labels.t_us.length; i++) {
    const t = labels.t_us[i]!;
    if (t < selection.startUs || t >= selection.endUs) continue;
    const primary = labels.primary[i]!;
    const secondary = labels.secondary[i]!;
    if (current && current.primary === primary && current.secondary === secondary) {
      continue; // run keeps its provisional end until the next run closes it
    }
    if (current) current.end_us = t;
    current = { start_us: t, end_us: selection.endUs, primary, secondary };
    edits.push(current);
  }
  return edits;
}

export function editForKey(key: string, tier: Tier): PrimaryLabel | SecondaryLabel | null {
  if (tier === "primary") return PRIMARY_KEYS[key] ?? null;
  return SECONDARY_KEYS[key] ?? null;
}

/**
 * Applies edit batches, records inverses for undo, and surfaces conflicts
 * without losing the attempted batch.
 */
export class EditSession {
  private undoStack: LabelEdit[][] = [];
  pendingBatch: LabelEdit[] | null = null;

  constructor(
    private api: ApiClient,
    private getLabels: () => LabelsResponse,
  ) {}

  get undoDepth(): number {
    return this.undoStack.length;
  }

  private rangeOf(edits: LabelEdit[]): Selection {
    return {
      startUs: Math.min(...edits.map((e) => e.start_us)),
      endUs: Math.max(...edits.map((e) => e.end_us)),
    };
  }

  async apply(state: ViewState, edits: LabelEdit[]): Promise<AppliedEdit> {
    if (!state.recordingId) throw new Error("no recording loaded");
    const inverse = inverseBatch(this.getLabels(), this.rangeOf(edits));
    try {
      const res = await this.api.putEdits(state.recordingId, state.baseRevision, edits);
      this.undoStack.push(inverse);
      this.pendingBatch = null;
      return { revision: res.revision };
    } catch (err) {
      if (err instanceof ConflictError) {
        this.pendingBatch = edits; // preserved for the reload prompt
      }
      throw err;
    }
  }

  async undo(state: ViewState): Promise<AppliedEdit | null> {
    const inverse = this.undoStack.pop();
    if (!inverse || !state.recordingId) return null;
    const res = await this.api.putEdits(state.recordingId, state.baseRevision, inverse);
    return { revision: res.revision };
  }

  /** Keyboard dispatch; returns the batch a key produces, or null. */
  batchForKey(state: ViewState, key: string): LabelEdit[] | null {
    if (!state.selection) return null;
    if (key === SP_TO_FIXATION_KEY) return spToFixationBatch(state.selection);
    const label = editForKey(key, activeTier(state));
    if (label === null) return null;
    return labelBatch(state.selection, activeTier(state), label);
  }
}
