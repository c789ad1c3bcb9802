// Scenario editor: the map renders on a canvas; start/goal/waypoints drag with
// live two-way-synced coordinate fields; obstacles get a type dropdown, a
// velocity field, and an ordered waypoint list. Saving posts the document and
// surfaces server violations inline.

import { ApiClient, ApiError, DocumentMeta } from "../api.js";
import { clear, el, fmtFloat } from "../dom.js";
import { HandleRef, ScenarioDraft } from "../scenarioModel.js";
import { MapPayload, Viewport, canvasToWorld, fitViewport, worldToCanvas } from "../transform.js";
import { drawMapOnCanvas } from "./mapEditor.js";

const HANDLE_COLORS = { start: "#2c7a2c", goal: "#b03030", obstacle: "#2255aa", waypoint: "#7788cc" };

export function scenarioEditorView(api: ApiClient, root: HTMLElement): () => void {
  let draft: ScenarioDraft | null = null;
  let payload: MapPayload | null = null;
  let viewport: Viewport | null = null;

  const canvas = el("canvas", { width: 480, height: 480, class: "map-canvas", id: "scenario-canvas" });
  const sidebar = el("div", { class: "scenario-sidebar" });
  const violationBox = el("div", { class: "error-banner", style: "display:none" });
  const mapPicker = el("select", { id: "map-picker" });
  const nameInput = el("input", { placeholder: "scenario name", value: "my scenario" });
  const visSelect = el("select", {},
    el("option", { value: "private" }, "private"),
    el("option", { value: "public" }, "public"));
  const saveStatus = el("span", { class: "muted" });

  function flag(message: string) {
    violationBox.textContent = message;
    violationBox.style.display = message ? "block" : "none";
  }

  function redraw() {
    if (!draft || !payload || !viewport) return;
    drawMapOnCanvas(canvas, payload);
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    const dot = (p: [number, number], color: string, r: number, label: string) => {
      const [px, py] = worldToCanvas(viewport!, p[0], p[1]);
      ctx.beginPath();
      ctx.arc(px, py, r, 0, 2 * Math.PI);
      ctx.fillStyle = color;
      ctx.fill();
      ctx.fillStyle = "#111";
      ctx.font = "11px sans-serif";
      ctx.fillText(label, px + r + 2, py + 3);
    };
    draft.obstacles.forEach((o, i) => {
      const pts = [o.start, ...o.waypoints];
      ctx.strokeStyle = HANDLE_COLORS.waypoint;
      ctx.beginPath();
      pts.concat([o.start]).forEach((p, j) => {
        const [px, py] = worldToCanvas(viewport!, p[0], p[1]);
        if (j === 0) ctx.moveTo(px, py);
        else ctx.lineTo(px, py);
      });
      ctx.stroke();
      dot(o.start, HANDLE_COLORS.obstacle, 6, `O${i}`);
      o.waypoints.forEach((w, j) => dot(w, HANDLE_COLORS.waypoint, 5, `O${i}W${j}`));
    });
    dot(draft.start, HANDLE_COLORS.start, 7, "start");
    dot(draft.goal, HANDLE_COLORS.goal, 7, "goal");
  }

  function coordInputs(ref: HandleRef, idPrefix: string): HTMLElement {
    const point = draft!.getHandle(ref);
    const x = el("input", { type: "number", step: 0.1, value: fmtFloat(point[0]), id: `${idPrefix}-x`, class: "coord" });
    const y = el("input", { type: "number", step: 0.1, value: fmtFloat(point[1]), id: `${idPrefix}-y`, class: "coord" });
    const apply = () => {
      const ok = draft!.moveHandle(ref, Number(x.value), Number(y.value));
      if (!ok) {
        flag("position is inside occupied space");
        const back = draft!.getHandle(ref);
        x.value = fmtFloat(back[0]);
        y.value = fmtFloat(back[1]);
      } else {
        flag("");
      }
      redraw();
    };
    x.addEventListener("change", apply);
    y.addEventListener("change", apply);
    return el("span", { class: "coord-pair" }, "x ", x, " y ", y);
  }

  function renderSidebar() {
    clear(sidebar);
    if (!draft) {
      sidebar.append(el("p", { class: "muted" }, "Select a map first."));
      return;
    }
    sidebar.append(
      el("h4", {}, "Robot"),
      el("div", { class: "handle-row" }, "start ", coordInputs({ kind: "start" }, "start")),
      el("div", { class: "handle-row" }, "goal ", coordInputs({ kind: "goal" }, "goal")),
      el("h4", {}, "Dynamic obstacles"),
    );
    const kindSelect = el("select", { id: "obstacle-kind" },
      el("option", { value: "pedestrian" }, "pedestrian"),
      el("option", { value: "vehicle" }, "vehicle"),
      el("option", { value: "generic" }, "generic"));
    sidebar.append(el("div", {},
      kindSelect,
      el("button", {
        id: "add-obstacle",
        onclick: () => {
          const at: [number, number] = [...draft!.start];
          draft!.addObstacle(kindSelect.value as any, [at[0] + 0.5, at[1] + 0.5]);
          renderSidebar();
          redraw();
        },
      }, "Add obstacle")));
    draft.obstacles.forEach((o, i) => {
      const speed = el("input", {
        type: "number", step: 0.1, min: 0, max: 3, value: o.speed, class: "speed-input",
        id: `obstacle-${i}-speed`,
        onchange: (ev: Event) => {
          o.speed = Number((ev.target as HTMLInputElement).value);
        },
      });
      const box = el("div", { class: "obstacle-box" },
        el("strong", {}, `O${i} (${o.kind}) `),
        el("label", {}, "velocity m/s ", speed),
        el("div", {}, "start ", coordInputs({ kind: "obstacle-start", obstacle: i }, `obstacle-${i}-start`)),
      );
      o.waypoints.forEach((_, j) => {
        box.append(el("div", {}, `waypoint ${j} `,
          coordInputs({ kind: "waypoint", obstacle: i, index: j }, `obstacle-${i}-wp-${j}`)));
      });
      box.append(
        el("button", {
          id: `obstacle-${i}-add-wp`,
          onclick: () => {
            const base = o.waypoints.length ? o.waypoints[o.waypoints.length - 1] : o.start;
            draft!.addWaypoint(i, [base[0] + 0.5, base[1]]);
            renderSidebar();
            redraw();
          },
        }, "Add waypoint"),
        el("button", {
          onclick: () => {
            draft!.removeObstacle(i);
            renderSidebar();
            redraw();
          },
        }, "Remove"),
      );
      sidebar.append(box);
    });
    sidebar.append(el("div", { class: "save-row" },
      nameInput, visSelect,
      el("button", { id: "save-scenario", onclick: save }, "Save scenario"),
      saveStatus));
  }

  async function save() {
    if (!draft) return;
    try {
      const doc = await api.createDoc(
        "scenarios", nameInput.value, String(visSelect.value), draft.toPayload());
      saveStatus.textContent = `saved as ${doc.id}`;
      flag("");
    } catch (err) {
      if (err instanceof ApiError) {
        flag(err.details.map((d) => `${d.field}: ${d.reason}`).join("; ") || err.message);
      }
    }
  }

  // canvas dragging
  let dragging: HandleRef | null = null;

  function handleAt(px: number, py: number): HandleRef | null {
    if (!draft || !viewport) return null;
    const candidates: [HandleRef, [number, number]][] = [
      [{ kind: "start" }, draft.start],
      [{ kind: "goal" }, draft.goal],
    ];
    draft.obstacles.forEach((o, i) => {
      candidates.push([{ kind: "obstacle-start", obstacle: i }, o.start]);
      o.waypoints.forEach((w, j) => candidates.push([{ kind: "waypoint", obstacle: i, index: j }, w]));
    });
    for (const [ref, point] of candidates) {
      const [hx, hy] = worldToCanvas(viewport, point[0], point[1]);
      if (Math.hypot(hx - px, hy - py) <= 10) return ref;
    }
    return null;
  }

  canvas.addEventListener("pointerdown", (ev) => {
    const rect = canvas.getBoundingClientRect();
    dragging = handleAt(ev.clientX - rect.left, ev.clientY - rect.top);
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (!dragging || !viewport) return;
    const rect = canvas.getBoundingClientRect();
    const [wx, wy] = canvasToWorld(viewport, ev.clientX - rect.left, ev.clientY - rect.top);
    if (draft!.moveHandle(dragging, wx, wy)) {
      flag("");
    } else {
      flag("cannot place into occupied space");
    }
    renderSidebar();
    redraw();
  });
  canvas.addEventListener("pointerup", () => { dragging = null; });

  async function pickMap(id: string) {
    const doc = await api.getDoc("maps", id);
    payload = doc.payload as MapPayload;
    viewport = fitViewport(payload, canvas.width, canvas.height);
    draft = new ScenarioDraft(doc.id, payload);
    // nudge the default handles into free space: walk the diagonal
    const meters = Math.min(payload.width, payload.height) * payload.resolution;
    for (let f = 0.15; f < 0.9; f += 0.05) {
      if (draft.isFree(f * meters, f * meters)) { draft.start = [f * meters, f * meters]; break; }
    }
    for (let f = 0.85; f > 0.1; f -= 0.05) {
      if (draft.isFree(f * meters, f * meters)) { draft.goal = [f * meters, f * meters]; break; }
    }
    renderSidebar();
    redraw();
  }

  mapPicker.addEventListener("change", () => pickMap(mapPicker.value));

  (async () => {
    const maps = await api.listDocs("maps");
    clear(mapPicker);
    mapPicker.append(el("option", { value: "" }, "select a map..."));
    for (const m of maps) mapPicker.append(el("option", { value: m.id }, m.name));
  })();

  root.append(
    el("h2", {}, "Scenario editor"),
    el("div", {}, "Map: ", mapPicker),
    el("div", { class: "editor-columns" }, sidebar, el("div", {}, canvas, violationBox)),
  );
  renderSidebar();
  return () => {};
}
