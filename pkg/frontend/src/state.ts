// Editor state and its URL-hash encoding. Sessions are shareable: the full
// slider/blend/camera configuration round-trips through location.hash.

export interface CameraState {
  position: [number, number, number];
  target: [number, number, number];
}

export interface EditorState {
  head: number;
  coefficients: Record<string, number>; // mode index -> alpha (zeros omitted)
  blendA: number;
  blendB: number;
  blendT: number;
  resolution: number;
  eta: number | null;
  camera: CameraState | null;
}

export function defaultState(): EditorState {
  return {
    head: 0,
    coefficients: {},
    blendA: 0,
    blendB: 0,
    blendT: 0,
    resolution: 48,
    eta: null,
    camera: null,
  };
}

function base64UrlEncode(text: string): string {
  return btoa(text).replace(/\+/g, "-").replace(/\//g, "_").replace(/=+$/, "");
}

function base64UrlDecode(text: string): string {
  const b64 = text.replace(/-/g, "+").replace(/_/g, "/");
  return atob(b64 + "=".repeat((4 - (b64.length % 4)) % 4));
}

/** Stable serialization: keys sorted, zero coefficients dropped. */
export function encodeState(state: EditorState): string {
  const coefficients: Record<string, number> = {};
  for (const key of Object.keys(state.coefficients).sort((a, b) => +a - +b)) {
    const value = state.coefficients[key];
    if (value !== 0) coefficients[key] = value;
  }
  const ordered = {
    blendA: state.blendA,
    blendB: state.blendB,
    blendT: state.blendT,
    camera: state.camera,
    coefficients,
    eta: state.eta,
    head: state.head,
    resolution: state.resolution,
  };
  return base64UrlEncode(JSON.stringify(ordered));
}

export function decodeState(encoded: string): EditorState {
  const parsed = JSON.parse(base64UrlDecode(encoded));
  const state = defaultState();
  if (typeof parsed.head === "number") state.head = parsed.head;
  if (parsed.coefficients && typeof parsed.coefficients === "object") {
    for (const [k, v] of Object.entries(parsed.coefficients)) {
      if (typeof v === "number" && Number.isFinite(v)) state.coefficients[k] = v;
    }
  }
  if (typeof parsed.blendA === "number") state.blendA = parsed.blendA;
  if (typeof parsed.blendB === "number") state.blendB = parsed.blendB;
  if (typeof parsed.blendT === "number") state.blendT = parsed.blendT;
  if (typeof parsed.resolution === "number") state.resolution = parsed.resolution;
  if (typeof parsed.eta === "number") state.eta = parsed.eta;
  if (parsed.camera && Array.isArray(parsed.camera.position)) {
    state.camera = {
      position: parsed.camera.position.slice(0, 3) as [number, number, number],
      target: (parsed.camera.target ?? [0, 0, 0]).slice(0, 3) as [
        number,
        number,
        number
      ],
    };
  }
  return state;
}

export function stateToHash(state: EditorState): string {
  return `#s=${encodeState(state)}`;
}

export function stateFromHash(hash: string): EditorState | null {
  const match = /#s=([A-Za-z0-9_-]+)/.exec(hash);
  if (!match) return null;
  try {
    return decodeState(match[1]);
  } catch {
    return null;
  }
}

/** Non-zero coefficient pairs in mode order, as the API expects them. */
export function coefficientPairs(state: EditorState): [number, number][] {
  return Object.keys(state.coefficients)
    .map((k) => [Number(k), state.coefficients[k]] as [number, number])
    .filter(([, alpha]) => alpha !== 0)
    .sort((a, b) => a[0] - b[0]);
}
