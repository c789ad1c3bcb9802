// Map editor: bounded sliders, debounced live preview from the generate
// endpoint, bundle upload (JSON map document), save with name + visibility.

import { ApiClient, ApiError } from "../api.js";
import { clear, el } from "../dom.js";
import { MAP_SLIDERS, clampToDef } from "../params.js";
import { MapPayload, decodeCells, rasterize } from "../transform.js";

export function drawMapOnCanvas(canvas: HTMLCanvasElement, payload: MapPayload): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const rgba = rasterize(payload, decodeCells(payload));
  // cast: lib.dom types ImageData input over ArrayBuffer only
  const image = new ImageData(rgba as unknown as Uint8ClampedArray<ArrayBuffer>, payload.width, payload.height);
  const off = document.createElement("canvas");
  off.width = payload.width;
  off.height = payload.height;
  off.getContext("2d")!.putImageData(image, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const scale = Math.min(canvas.width / payload.width, canvas.height / payload.height);
  ctx.drawImage(off, 0, 0, payload.width * payload.height ? payload.width : 1, payload.height,
    0, 0, payload.width * scale, payload.height * scale);
}

export function mapEditorView(api: ApiClient, root: HTMLElement): () => void {
  const params: Record<string, number | string> = { kind: "outdoor", resolution: 0.05 };
  for (const def of MAP_SLIDERS) params[def.key] = def.default;

  const canvas = el("canvas", { width: 420, height: 420, class: "map-canvas" });
  const errorBox = el("div", { class: "error-banner", style: "display:none" });
  const nameInput = el("input", { placeholder: "map name", value: "my map" });
  const visSelect = el("select", {},
    el("option", { value: "private" }, "private"),
    el("option", { value: "public" }, "public"));
  const saveStatus = el("span", { class: "muted" });

  let debounce: ReturnType<typeof setTimeout> | null = null;
  let latestPayload: MapPayload | null = null;

  async function preview() {
    errorBox.style.display = "none";
    try {
      const doc = await api.generateMap(params, { store: false });
      latestPayload = doc.payload as MapPayload;
      drawMapOnCanvas(canvas, latestPayload);
    } catch (err) {
      if (err instanceof ApiError) {
        errorBox.textContent = err.details.map((d) => `${d.field}: ${d.reason}`).join("; ")
          || err.message;
        errorBox.style.display = "block";
      }
    }
  }

  function schedulePreview() {
    if (debounce) clearTimeout(debounce);
    debounce = setTimeout(preview, 250);
  }

  const sliderBox = el("div", { class: "editor-fields" });
  const kindSelect = el("select", {
    onchange: (ev: Event) => {
      params.kind = (ev.target as HTMLSelectElement).value;
      schedulePreview();
    },
  }, el("option", { value: "outdoor" }, "outdoor"), el("option", { value: "indoor" }, "indoor"));
  sliderBox.append(el("label", {}, "kind ", kindSelect));

  for (const def of MAP_SLIDERS) {
    const value = el("span", { class: "slider-value" }, String(def.default));
    const slider = el("input", {
      type: "range", min: def.min, max: def.max, step: def.step, value: def.default,
      "data-key": def.key,
      oninput: (ev: Event) => {
        const v = clampToDef(def, Number((ev.target as HTMLInputElement).value));
        params[def.key] = v;
        value.textContent = String(v);
        schedulePreview();
      },
    });
    sliderBox.append(
      el("label", { class: "slider-row" }, `${def.label} `, slider, value,
        el("small", { class: "help" }, def.help)),
    );
  }

  const uploadInput = el("input", {
    type: "file",
    onchange: async (ev: Event) => {
      const file = (ev.target as HTMLInputElement).files?.[0];
      if (!file) return;
      try {
        const payload = JSON.parse(await file.text());
        const doc = await api.createDoc(
          "maps", nameInput.value || file.name, String(visSelect.value), payload);
        saveStatus.textContent = `uploaded as ${doc.id}`;
      } catch (err) {
        errorBox.textContent = err instanceof ApiError
          ? err.details.map((d) => `${d.field}: ${d.reason}`).join("; ") || err.message
          : "upload is not a valid map document";
        errorBox.style.display = "block";
      }
    },
  });

  root.append(
    el("h2", {}, "Map editor"),
    el("div", { class: "editor-columns" },
      el("div", {}, sliderBox,
        el("div", { class: "save-row" },
          nameInput, visSelect,
          el("button", {
            onclick: async () => {
              try {
                const doc = await api.generateMap(params, {
                  store: true, name: nameInput.value, visibility: String(visSelect.value),
                });
                saveStatus.textContent = `saved as ${doc.id}`;
              } catch (err) {
                if (err instanceof ApiError) {
                  errorBox.textContent = err.message;
                  errorBox.style.display = "block";
                }
              }
            },
          }, "Save map"),
          saveStatus),
        el("div", { class: "upload-row" }, el("span", {}, "Upload map document: "), uploadInput)),
      el("div", {}, canvas, errorBox)),
  );
  preview();
  return () => { if (debounce) clearTimeout(debounce); };
}
