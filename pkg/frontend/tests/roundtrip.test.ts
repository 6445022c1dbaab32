/**
 * Scripted end-to-end test against the real annotation service: the Python
 * server is spawned on a synthetic recording and the app is driven exactly
 * as the keyboard handlers would drive it.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, ConflictError } from "../src/api.js";
import { AnnotatorApp } from "../src/app.js";

let server: ChildProcess;
let baseUrl: string;

beforeAll(async () => {
  const script = join(dirname(fileURLToPath(import.meta.url)), "fixture_server.py");
  server = spawn("python3", [script], { stdio: ["ignore", "pipe", "inherit"] });
  const port = await new Promise<number>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("fixture server timed out")), 20_000);
    server.stdout!.on("data", (chunk: Buffer) => {
      const match = /READY (\d+)/.exec(chunk.toString());
      if (match) {
        clearTimeout(timer);
        resolve(Number(match[1]));
      }
    });
    server.on("exit", (code) => reject(new Error(`fixture server exited: ${code}`)));
  });
  baseUrl = `http://127.0.0.1:${port}`;
  // wait until the HTTP endpoint actually answers
  for (let i = 0; i < 50; i++) {
    try {
      const r = await fetch(`${baseUrl}/api/recordings`);
      if (r.ok) return;
    } catch {
      /* not up yet */
    }
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error("service never became reachable");
}, 30_000);

afterAll(() => {
  server?.kill();
});

describe("annotation round trip", () => {
  it("lists the fixture recording", async () => {
    const api = new ApiClient(baseUrl);
    const recordings = await api.listRecordings();
    expect(recordings.map((r) => r.id)).toContain("demo");
    expect(recordings[0]!.annotation).toBe("none");
  });

  it("applies the stage-2 SP-to-fixation shortcut and persists both tiers", async () => {
    const api = new ApiClient(baseUrl);
    const app = new AnnotatorApp(api);
    await app.loadRecording("demo");
    expect(app.labels!.revision).toBe(0);

    const t = app.labels!.t_us;
    const [selStart, selEnd] = [t[100]!, t[220]!];
    app.selectRange(selStart, selEnd);

    // stage 1: mark the range as pursuit (primary tier in FOV mode)
    expect(app.state.mode).toBe("FOV");
    await app.handleKey("p");
    expect(app.labels!.primary[150]).toBe("SP");

    // stage 2: switch to E+H and apply the SP->fixation shortcut
    await app.handleKey("m");
    expect(app.state.mode).toBe("E+H");
    app.selectRange(selStart, selEnd);
    await app.handleKey("g");

    // a fresh app instance simulates the browser reload
    const reloaded = new AnnotatorApp(new ApiClient(baseUrl));
    await reloaded.loadRecording("demo");
    expect(reloaded.labels!.revision).toBe(2);
    expect(reloaded.labels!.primary[150]).toBe("FIXATION");
    expect(reloaded.labels!.secondary[150]).toBe("VOR");
    expect(reloaded.labels!.primary[50]).toBe("UNLABELLED");
  });

  it("mode switch swaps the plotted streams between FOV and E+H server values", async () => {
    const api = new ApiClient(baseUrl);
    const app = new AnnotatorApp(api);
    await app.loadRecording("demo");

    const fov = await api.getSamples("demo", "fov");
    const eh = await api.getSamples("demo", "eh");
    // the fixture has head motion, so the two frames genuinely differ
    expect(fov.x[900]).not.toBeCloseTo(eh.x[900]!, 3);

    expect(app.state.mode).toBe("FOV");
    expect(app.samples!.frame).toBe("fov");
    expect(app.samples!.x).toEqual(fov.x);
    expect(app.samples!.y).toEqual(fov.y);

    await app.toggleMode();
    expect(app.samples!.frame).toBe("eh");
    expect(app.samples!.x).toEqual(eh.x);
    expect(app.samples!.gaze_speed).toEqual(eh.gaze_speed);
  });

  it("undo restores the previous labels through the revision log", async () => {
    const api = new ApiClient(baseUrl);
    const app = new AnnotatorApp(api);
    await app.loadRecording("demo");
    const t = app.labels!.t_us;
    const before = app.labels!.primary[400]!;
    app.selectRange(t[390]!, t[450]!);
    await app.handleKey("n"); // NOISE
    expect(app.labels!.primary[400]).toBe("NOISE");
    await app.handleKey("z"); // undo
    expect(app.labels!.primary[400]).toBe(before);
  });

  it("a concurrent save conflicts instead of silently overwriting", async () => {
    const api = new ApiClient(baseUrl);
    const appA = new AnnotatorApp(api);
    const appB = new AnnotatorApp(new ApiClient(baseUrl));
    await appA.loadRecording("demo");
    await appB.loadRecording("demo");
    const t = appA.labels!.t_us;

    appA.selectRange(t[500]!, t[520]!);
    await appA.handleKey("f");

    // B still holds the old base revision; its save must 409
    appB.selectRange(t[500]!, t[520]!);
    await appB.handleKey("s");
    expect(appB.state.conflict).toBe(true);
    expect(appB.edits.pendingBatch).not.toBeNull();

    // after reloading, the preserved batch can be retried
    await appB.reloadLabels();
    const retry = appB.edits.pendingBatch!;
    const applied = await appB.edits.apply(appB.state, retry);
    expect(applied.revision).toBeGreaterThan(0);
  });
});
