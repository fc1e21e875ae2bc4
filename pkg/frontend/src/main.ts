// Editor wiring: state <-> URL, panels -> debounced mesh requests -> viewer.

import { ApiClient, ApiError } from "./api.js";
import { BlendPanel, EtaGauge, ModePanel } from "./panels.js";
import { Debouncer, LatestWins } from "./requests.js";
import {
  coefficientPairs,
  defaultState,
  stateFromHash,
  stateToHash,
} from "./state.js";

const api = new ApiClient("");
const state = stateFromHash(location.hash) ?? defaultState();

const banner = document.getElementById("banner")!;
function showError(message: string): void {
  banner.textContent = message;
  banner.classList.remove("hidden");
  setTimeout(() => banner.classList.add("hidden"), 4000);
}

function errorText(err: unknown): string {
  return err instanceof ApiError ? err.message : `request failed: ${err}`;
}

const meshRequests = new LatestWins();
const blendRequests = new LatestWins();
const hashWriter = new Debouncer(250);
const meshDebounce = new Debouncer(120);

function writeHash(): void {
  hashWriter.schedule(() => {
    history.replaceState(null, "", stateToHash(state));
  });
}

async function boot() {
  const { MeshViewer } = await import("./viewer.js");
  const viewer = new MeshViewer(document.getElementById("view")!);
  if (state.camera) viewer.applyCamera(state.camera);
  viewer.onCameraChange = () => {
    state.camera = viewer.readCamera();
    writeHash();
  };

  const info = await api.modelInfo();
  document.getElementById("model-info")!.textContent =
    `D=${info.hidden_dim} depth=${info.depth} ω₀=${info.omega0} | ` +
    info.heads.map((h) => `${h.index}:${h.label}`).join("  ");

  const headSelect = document.getElementById("head-select") as HTMLSelectElement;
  const blendASelect = document.getElementById("blend-a") as HTMLSelectElement;
  const blendBSelect = document.getElementById("blend-b") as HTMLSelectElement;
  for (const select of [headSelect, blendASelect, blendBSelect]) {
    for (const head of info.heads) {
      const option = document.createElement("option");
      option.value = String(head.index);
      option.textContent = `${head.index}: ${head.label}`;
      select.appendChild(option);
    }
  }
  headSelect.value = String(state.head);
  blendASelect.value = String(state.blendA);
  blendBSelect.value = String(Math.min(state.blendB, info.heads.length - 1));

  const modes = await api.modes(Math.min(info.hidden_dim, 128));
  const modePanel = new ModePanel(document.getElementById("modes")!);
  modePanel.render(modes, state.coefficients);
  const gauge = new EtaGauge(document.getElementById("eta")!);
  gauge.set(state.eta);
  const blendPanel = new BlendPanel(document.getElementById("blend")!);
  blendPanel.update(state.blendT);

  function requestPreviewMesh(): void {
    meshDebounce.schedule(() => {
      void meshRequests.run(
        (signal) =>
          api.mesh(
            {
              head: state.head,
              coefficients: coefficientPairs(state),
              resolution: state.resolution,
            },
            signal
          ),
        (payload) => viewer.setMesh(payload),
        (err) => showError(errorText(err))
      );
    });
  }

  function requestBlendMesh(): void {
    meshDebounce.schedule(() => {
      void blendRequests.run(
        async (signal) =>
          JSON.parse(
            await api.blendMeshRaw(
              state.blendA,
              state.blendB,
              state.blendT,
              state.resolution,
              signal
            )
          ),
        (payload) => viewer.setMesh(payload),
        (err) => showError(errorText(err))
      );
    });
  }

  modePanel.onChange = (mode, alpha) => {
    if (alpha === 0) delete state.coefficients[mode];
    else state.coefficients[mode] = alpha;
    state.eta = null;
    gauge.set(null);
    writeHash();
    requestPreviewMesh();
  };

  headSelect.addEventListener("change", () => {
    state.head = Number(headSelect.value);
    writeHash();
    requestPreviewMesh();
  });

  blendPanel.onChange = (t) => {
    state.blendT = t;
    state.blendA = Number(blendASelect.value);
    state.blendB = Number(blendBSelect.value);
    writeHash();
    requestBlendMesh();
  };
  for (const select of [blendASelect, blendBSelect]) {
    select.addEventListener("change", () => blendPanel.onChange?.(state.blendT));
  }

  (document.getElementById("wireframe") as HTMLInputElement).addEventListener(
    "change",
    (event) => viewer.setWireframe((event.target as HTMLInputElement).checked)
  );

  const resolutionInput = document.getElementById("resolution") as HTMLInputElement;
  resolutionInput.value = String(state.resolution);
  resolutionInput.addEventListener("change", () => {
    state.resolution = Number(resolutionInput.value);
    writeHash();
    requestPreviewMesh();
  });

  // edit workflow: preview eta for the current combo, then apply / undo
  let pendingSolution: string | null = null;
  document.getElementById("solve")!.addEventListener("click", async () => {
    const pairs = coefficientPairs(state);
    try {
      const recipe = (document.getElementById("recipe") as HTMLTextAreaElement)
        .value.trim();
      const result = recipe
        ? await (async () => {
            const parsed = JSON.parse(recipe);
            return api.solve(parsed.points, parsed.targets, parsed.ridge ?? null);
          })()
        : await api.solveCombo(state.head, pairs);
      pendingSolution = result.solution_id;
      state.eta = result.eta;
      gauge.set(result.eta);
      writeHash();
    } catch (err) {
      showError(errorText(err));
    }
  });

  document.getElementById("apply")!.addEventListener("click", async () => {
    if (!pendingSolution) {
      showError("solve an edit first");
      return;
    }
    try {
      await api.apply(pendingSolution, state.head);
      pendingSolution = null;
      state.coefficients = {};
      modePanel.render(await api.modes(Math.min(info.hidden_dim, 128)), {});
      requestPreviewMesh();
    } catch (err) {
      showError(errorText(err));
    }
  });

  document.getElementById("undo")!.addEventListener("click", async () => {
    try {
      await api.undo();
      requestPreviewMesh();
    } catch (err) {
      showError(errorText(err));
    }
  });

  document.getElementById("export")!.addEventListener("click", async () => {
    const path = prompt("checkpoint path to write", "edited.ckpt");
    if (!path) return;
    try {
      showError(`saved ${await api.exportCheckpoint(path)}`);
    } catch (err) {
      showError(errorText(err));
    }
  });

  requestPreviewMesh();
}

boot().catch((err) => showError(errorText(err)));
