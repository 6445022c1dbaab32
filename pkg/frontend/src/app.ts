/** Application shell: wires the API, state, edits, and panels to the DOM.
 *
 * Kept framework-free so the whole flow is drivable headlessly in tests:
 * construct with a document and an ApiClient, then call the same methods
 * the event handlers use.
 */

import { ApiClient, ConflictError, type LabelsResponse, type SamplesResponse } from "./api.js";
import { EditSession } from "./edits.js";
import {
  MODE_SWITCH_KEY,
  TIER_OVERRIDE_KEY,
  UNDO_KEY,
} from "./labels.js";
import { layoutPanels, paint, type PanelGeometry } from "./panels.js";
import {
  activeTier,
  initialState,
  loadedRecording,
  select,
  switchMode,
  type ViewState,
} from "./state.js";

const PANEL_WIDTH = 960;
const PANEL_HEIGHT = 120;

export class AnnotatorApp {
  state: ViewState = initialState();
  samples: SamplesResponse | null = null;
  labels: LabelsResponse | null = null;
  edits: EditSession;
  lastGeometry: PanelGeometry[] = [];
  private canvases: HTMLCanvasElement[] = [];
  private status: HTMLElement | null = null;

  constructor(
    private api: ApiClient,
    private doc: Document | null = null,
  ) {
    this.edits = new EditSession(api, () => {
      if (!this.labels) throw new Error("labels not loaded");
      return this.labels;
    });
  }

  /** Build the DOM skeleton (no-op when constructed without a document). */
  mount(rootId = "app"): void {
    if (!this.doc) return;
    const root = this.doc.getElementById(rootId);
    if (!root) throw new Error(`missing #${rootId}`);
    root.innerHTML = "";
    this.status = this.doc.createElement("div");
    this.status.className = "status";
    root.appendChild(this.status);
    this.canvases = [];
    for (let i = 0; i < 5; i++) {
      const canvas = this.doc.createElement("canvas");
      canvas.width = PANEL_WIDTH;
      canvas.height = PANEL_HEIGHT;
      canvas.className = "panel";
      root.appendChild(canvas);
      this.canvases.push(canvas);
    }
    this.doc.addEventListener("keydown", (ev) => {
      void this.handleKey((ev as KeyboardEvent).key);
    });
  }

  async loadRecording(id: string): Promise<void> {
    const labels = await this.api.getLabels(id);
    const t = labels.t_us;
    const end = t.length > 0 ? t[t.length - 1]! + (t[1]! - t[0]!) : 0;
    this.state = loadedRecording(this.state, id, t[0] ?? 0, end, labels.revision);
    this.labels = labels;
    await this.refetchSamples();
    this.render();
  }

  /** Mode switch re-requests the other frame's coordinates and speeds. */
  async toggleMode(): Promise<void> {
    this.state = switchMode(this.state);
    await this.refetchSamples();
    this.render();
  }

  async refetchSamples(): Promise<void> {
    if (!this.state.recordingId) return;
    const frame = this.state.mode === "FOV" ? "fov" : "eh";
    this.samples = await this.api.getSamples(this.state.recordingId, frame);
  }

  async reloadLabels(): Promise<void> {
    if (!this.state.recordingId) return;
    this.labels = await this.api.getLabels(this.state.recordingId);
    this.state = { ...this.state, baseRevision: this.labels.revision, conflict: false };
    this.render();
  }

  selectRange(startUs: number, endUs: number): void {
    this.state = select(this.state, startUs, endUs);
    this.render();
  }

  async handleKey(key: string): Promise<void> {
    if (key === MODE_SWITCH_KEY) {
      await this.toggleMode();
      return;
    }
    if (key === TIER_OVERRIDE_KEY) {
      this.state = { ...this.state, tierOverride: !this.state.tierOverride };
      this.render();
      return;
    }
    if (key === UNDO_KEY) {
      try {
        const applied = await this.edits.undo(this.state);
        if (applied) {
          this.state = { ...this.state, baseRevision: applied.revision };
          await this.reloadLabels();
        }
      } catch (err) {
        this.noteError(err);
      }
      return;
    }
    const batch = this.edits.batchForKey(this.state, key);
    if (!batch) return;
    try {
      const applied = await this.edits.apply(this.state, batch);
      this.state = { ...this.state, baseRevision: applied.revision, conflict: false };
      await this.reloadLabels();
    } catch (err) {
      this.noteError(err);
    }
  }

  private noteError(err: unknown): void {
    if (err instanceof ConflictError) {
      // stale revision: keep the batch, ask the user to reload
      this.state = { ...this.state, conflict: true, error: err.message };
    } else {
      this.state = { ...this.state, error: String(err) };
    }
    this.render();
  }

  render(): void {
    if (!this.samples || !this.labels) return;
    this.lastGeometry = layoutPanels(this.state, this.samples, this.labels);
    if (this.status) {
      const tier = activeTier(this.state);
      const conflict = this.state.conflict ? " [CONFLICT: press r to reload]" : "";
      const error = this.state.error && !this.state.conflict ? ` [${this.state.error}]` : "";
      this.status.textContent =
        `${this.state.recordingId ?? "-"} | mode ${this.state.mode} | edit tier ${tier}` +
        ` | rev ${this.state.baseRevision}${conflict}${error}`;
    }
    for (let i = 0; i < this.canvases.length && i < this.lastGeometry.length; i++) {
      const ctx = this.canvases[i]!.getContext("2d");
      if (ctx) paint(ctx, this.lastGeometry[i]!, PANEL_WIDTH, PANEL_HEIGHT);
    }
  }
}
