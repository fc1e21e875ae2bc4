// Control panels: mode sliders, the editability gauge, and the blend slider.

import type { ModesInfo } from "./api.js";

const TOP_K = 20;
const ETA_WARN_BELOW = 0.95;

export interface ModeSliderSpec {
  mode: number;
  eigenvalue: number;
  bound: number; // slider range is [-bound, +bound]
}

/**
 * Slider bounds scale with 1/sqrt(lambda_k): a head perturbation alpha*v_k
 * changes the field with RMS alpha*sqrt(lambda_k/N), so equal slider throw
 * means comparable on-screen displacement for every mode. Target throw is
 * 0.25 scene units of RMS field change at full deflection.
 */
export function sliderSpecs(modes: ModesInfo, throwRms = 0.25): ModeSliderSpec[] {
  const floor = modes.eigenvalues.length ? modes.eigenvalues[0] * 1e-12 : 0;
  return modes.eigenvalues.map((lam, k) => ({
    mode: k,
    eigenvalue: lam,
    bound:
      lam > floor && lam > 0
        ? throwRms / Math.sqrt(lam / Math.max(modes.n_points, 1))
        : 0,
  }));
}

export class ModePanel {
  readonly root: HTMLElement;
  private inputs = new Map<number, HTMLInputElement>();
  onChange: ((mode: number, alpha: number) => void) | null = null;

  constructor(root: HTMLElement) {
    this.root = root;
  }

  render(modes: ModesInfo, current: Record<string, number>): void {
    this.root.textContent = "";
    this.inputs.clear();
    const specs = sliderSpecs(modes);
    const search = document.createElement("input");
    search.type = "search";
    search.placeholder = `filter modes (0..${specs.length - 1})`;
    search.className = "mode-search";
    this.root.appendChild(search);

    const list = document.createElement("div");
    list.className = "mode-list";
    this.root.appendChild(list);

    const rows: HTMLElement[] = [];
    for (const spec of specs) {
      const row = document.createElement("div");
      row.className = "mode-row";
      row.dataset.mode = String(spec.mode);
      if (spec.mode >= TOP_K) row.classList.add("hidden");

      const label = document.createElement("label");
      label.textContent = `v${spec.mode}  λ=${spec.eigenvalue.toExponential(2)}`;
      const slider = document.createElement("input");
      slider.type = "range";
      slider.min = String(-spec.bound);
      slider.max = String(spec.bound);
      slider.step = String(spec.bound / 200 || 1e-6);
      slider.value = String(current[spec.mode] ?? 0);
      slider.disabled = spec.bound === 0;
      const value = document.createElement("span");
      value.className = "mode-value";
      value.textContent = Number(slider.value).toPrecision(3);
      slider.addEventListener("input", () => {
        value.textContent = Number(slider.value).toPrecision(3);
        this.onChange?.(spec.mode, Number(slider.value));
      });
      const zero = document.createElement("button");
      zero.textContent = "0";
      zero.title = "reset this mode";
      zero.addEventListener("click", () => {
        slider.value = "0";
        value.textContent = "0.00";
        this.onChange?.(spec.mode, 0);
      });

      row.append(label, slider, value, zero);
      list.appendChild(row);
      rows.push(row);
      this.inputs.set(spec.mode, slider);
    }

    search.addEventListener("input", () => {
      const query = search.value.trim();
      for (const row of rows) {
        const mode = Number(row.dataset.mode);
        const visible = query
          ? row.dataset.mode!.includes(query) || `v${row.dataset.mode}`.includes(query)
          : mode < TOP_K;
        row.classList.toggle("hidden", !visible);
      }
    });
  }

  setAll(values: Record<string, number>): void {
    for (const [mode, input] of this.inputs) {
      input.value = String(values[mode] ?? 0);
    }
  }
}

export class EtaGauge {
  private bar: HTMLElement;
  private label: HTMLElement;
  private warning: HTMLElement;

  constructor(root: HTMLElement) {
    root.classList.add("eta-gauge");
    this.label = document.createElement("div");
    this.label.className = "eta-label";
    const track = document.createElement("div");
    track.className = "eta-track";
    this.bar = document.createElement("div");
    this.bar.className = "eta-bar";
    track.appendChild(this.bar);
    this.warning = document.createElement("div");
    this.warning.className = "eta-warning hidden";
    this.warning.textContent = "edit is partially out of span";
    root.append(this.label, track, this.warning);
    this.set(null);
  }

  set(eta: number | null): void {
    if (eta === null) {
      this.label.textContent = "η —";
      this.bar.style.width = "0%";
      this.warning.classList.add("hidden");
      return;
    }
    this.label.textContent = `η ${eta.toFixed(5)}`;
    this.bar.style.width = `${Math.max(0, Math.min(1, eta)) * 100}%`;
    this.bar.classList.toggle("low", eta < ETA_WARN_BELOW);
    this.warning.classList.toggle("hidden", eta >= ETA_WARN_BELOW);
  }
}

export class BlendPanel {
  readonly slider: HTMLInputElement;
  readonly note: HTMLElement;
  onChange: ((t: number) => void) | null = null;

  constructor(root: HTMLElement, min = -0.5, max = 1.5) {
    const label = document.createElement("label");
    label.textContent = "blend t";
    this.slider = document.createElement("input");
    this.slider.type = "range";
    this.slider.min = String(min);
    this.slider.max = String(max);
    this.slider.step = "0.01";
    this.slider.value = "0";
    this.note = document.createElement("span");
    this.note.className = "blend-note";
    root.append(label, this.slider, this.note);
    this.slider.addEventListener("input", () => {
      const t = snapBlend(Number(this.slider.value));
      this.update(t);
      this.onChange?.(t);
    });
    this.update(0);
  }

  update(t: number): void {
    this.slider.value = String(t);
    if (t === 0 || t === 1) {
      this.note.textContent = `t=${t} (exact head)`;
    } else if (t < 0 || t > 1) {
      this.note.textContent = `t=${t.toFixed(2)} (extrapolation)`;
    } else {
      this.note.textContent = `t=${t.toFixed(2)}`;
    }
  }
}

/** Snap near the endpoints so t=0 and t=1 show the exact head meshes. */
export function snapBlend(t: number, snap = 0.02): number {
  if (Math.abs(t) < snap) return 0;
  if (Math.abs(t - 1) < snap) return 1;
  return t;
}
