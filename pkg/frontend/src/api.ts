// Typed client for the gramedit service. The UI holds no model math of its
// own: every eta and every mesh comes from these endpoints.

export interface MeshPayload {
  n_vertices: number;
  n_triangles: number;
  vertices: number[];
  triangles: number[];
}

export interface HeadInfo {
  index: number;
  label: string;
}

export interface ModelInfo {
  input_dim: number;
  hidden_dim: number;
  depth: number;
  omega0: number;
  heads: HeadInfo[];
}

export interface ModesInfo {
  eigenvalues: number[];
  rank: number;
  k: number;
  clamped: boolean;
  n_points: number;
}

export interface SolveResult {
  solution_id: string;
  eta: number;
  norm: number;
}

export interface MeshRequest {
  head: number;
  coefficients: [number, number][];
  resolution: number;
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function checkOk(res: Response): Promise<Response> {
  if (!res.ok) {
    let detail = res.statusText;
    try {
      const body = await res.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      // non-JSON error body
    }
    throw new ApiError(res.status, detail);
  }
  return res;
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  private url(path: string): string {
    return this.base + path;
  }

  async health(): Promise<boolean> {
    try {
      const res = await fetch(this.url("/api/health"));
      return res.ok;
    } catch {
      return false;
    }
  }

  async modelInfo(): Promise<ModelInfo> {
    const res = await checkOk(await fetch(this.url("/api/model")));
    return res.json();
  }

  async modes(k: number): Promise<ModesInfo> {
    const res = await checkOk(await fetch(this.url(`/api/modes?k=${k}`)));
    return res.json();
  }

  /** Raw response text, for byte-level comparisons and cache keys. */
  async meshRaw(req: MeshRequest, signal?: AbortSignal): Promise<string> {
    const res = await checkOk(
      await fetch(this.url("/api/mesh"), {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(req),
        signal,
      })
    );
    return res.text();
  }

  async mesh(req: MeshRequest, signal?: AbortSignal): Promise<MeshPayload> {
    return JSON.parse(await this.meshRaw(req, signal));
  }

  async blendMeshRaw(
    a: number,
    b: number,
    t: number,
    resolution: number,
    signal?: AbortSignal
  ): Promise<string> {
    const params = new URLSearchParams({
      a: String(a),
      b: String(b),
      t: String(t),
      resolution: String(resolution),
    });
    const res = await checkOk(
      await fetch(this.url(`/api/heads/blend?${params}`), { signal })
    );
    return res.text();
  }

  async solve(
    points: number[][],
    targets: number[],
    ridge: number | null = null
  ): Promise<SolveResult> {
    const res = await checkOk(
      await fetch(this.url("/api/edit/solve"), {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ points, targets, ridge }),
      })
    );
    return res.json();
  }

  async solveCombo(
    head: number,
    coefficients: [number, number][]
  ): Promise<SolveResult> {
    const res = await checkOk(
      await fetch(this.url("/api/edit/solve-combo"), {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ head, coefficients }),
      })
    );
    return res.json();
  }

  async apply(solutionId: string, head: number): Promise<void> {
    await checkOk(
      await fetch(this.url("/api/edit/apply"), {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ solution_id: solutionId, head }),
      })
    );
  }

  async undo(): Promise<void> {
    await checkOk(await fetch(this.url("/api/edit/undo"), { method: "POST" }));
  }

  async exportCheckpoint(path: string): Promise<string> {
    const res = await checkOk(
      await fetch(this.url("/api/export"), {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ path }),
      })
    );
    return (await res.json()).path;
  }
}
