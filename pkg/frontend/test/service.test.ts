// Integration against the real service (acceptance: UI correctness by proxy).
// Spawns the Python service on a random port with a deterministic fixture
// checkpoint, then drives it through the same ApiClient the UI uses.

import { spawn, type ChildProcess } from "node:child_process";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { ApiClient } from "../src/api.js";

const PORT = 18000 + Math.floor(Math.random() * 2000);
const BASE = `http://127.0.0.1:${PORT}`;
let service: ChildProcess;
const api = new ApiClient(BASE);

beforeAll(async () => {
  const here = dirname(fileURLToPath(import.meta.url));
  service = spawn("python3", [join(here, "launch_service.py"), String(PORT)], {
    stdio: "ignore",
  });
  const deadline = Date.now() + 60_000;
  while (Date.now() < deadline) {
    if (await api.health()) return;
    await new Promise((r) => setTimeout(r, 300));
  }
  throw new Error("service did not come up");
}, 70_000);

afterAll(() => {
  service?.kill();
});

describe("service integration", () => {
  it("zero-coefficient preview equals the base mesh payload byte-for-byte", async () => {
    const base = await api.meshRaw({ head: 0, coefficients: [], resolution: 16 });
    const zeroed = await api.meshRaw({
      head: 0,
      coefficients: [
        [0, 0],
        [3, 0],
      ],
      resolution: 16,
    });
    expect(zeroed).toBe(base);
    const again = await api.meshRaw({ head: 0, coefficients: [], resolution: 16 });
    expect(again).toBe(base); // deterministic payloads
  });

  it("apply then undo restores the pre-apply mesh payload", async () => {
    const before = await api.meshRaw({ head: 0, coefficients: [], resolution: 16 });
    const solution = await api.solveCombo(0, [[0, 0.08]]);
    expect(solution.eta).toBe(1.0);
    await api.apply(solution.solution_id, 0);
    const after = await api.meshRaw({ head: 0, coefficients: [], resolution: 16 });
    expect(after).not.toBe(before);
    await api.undo();
    const restored = await api.meshRaw({ head: 0, coefficients: [], resolution: 16 });
    expect(restored).toBe(before);
  });

  it("point/target solve reports eta in [0, 1] and applies cleanly", async () => {
    const points: number[][] = [];
    const targets: number[] = [];
    for (let i = 0; i < 60; i++) {
      points.push([
        Math.sin(i * 1.7) * 0.8,
        Math.cos(i * 2.3) * 0.8,
        Math.sin(i * 0.9) * 0.8,
      ]);
      targets.push(0.01);
    }
    const solution = await api.solve(points, targets);
    expect(solution.eta).toBeGreaterThanOrEqual(0);
    expect(solution.eta).toBeLessThanOrEqual(1);
    await api.apply(solution.solution_id, 0);
    await api.undo();
  });

  it("mode metadata supports the slider layout", async () => {
    const modes = await api.modes(10);
    expect(modes.eigenvalues.length).toBe(10);
    expect(modes.n_points).toBe(1000);
    const sorted = [...modes.eigenvalues].sort((a, b) => b - a);
    expect(modes.eigenvalues).toEqual(sorted);
  });

  it("stale responses never overwrite the newer render", async () => {
    // exercised against the live service: a heavy (res 48) request issued
    // first, a light (res 12) request issued second; the light one must win
    const { LatestWins } = await import("../src/requests.js");
    const gate = new LatestWins();
    const renders: number[] = [];
    const heavy = gate.run(
      (signal) =>
        api.mesh({ head: 0, coefficients: [], resolution: 48 }, signal),
      (m) => renders.push(m.n_vertices)
    );
    const light = gate.run(
      (signal) =>
        api.mesh({ head: 0, coefficients: [], resolution: 12 }, signal),
      (m) => renders.push(m.n_vertices)
    );
    await Promise.all([heavy, light]);
    const lightMesh = await api.mesh({ head: 0, coefficients: [], resolution: 12 });
    expect(renders).toEqual([lightMesh.n_vertices]);
  });
});
