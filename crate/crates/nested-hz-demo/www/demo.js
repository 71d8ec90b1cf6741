// Canvas driver for the refinement demo. Expects the wasm-bindgen output in
// ./pkg (see the README for the two build commands).

import init, { Demo } from "./pkg/nested_hz_demo.js";

const canvas = document.getElementById("view");
const ctx = canvas.getContext("2d");
const stats = document.getElementById("stats");
const legend = document.getElementById("legend");
const controls = {
  problem: document.getElementById("problem"),
  space: document.getElementById("space"),
  field: document.getElementById("field"),
  theta: document.getElementById("theta"),
  thetaval: document.getElementById("thetaval"),
  showmarked: document.getElementById("showmarked"),
};

let demo = null;

function viridis(t) {
  // compact 5-stop approximation
  const stops = [
    [68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37],
  ];
  const x = Math.min(Math.max(t, 0), 1) * (stops.length - 1);
  const i = Math.min(Math.floor(x), stops.length - 2);
  const f = x - i;
  const c = stops[i].map((a, k) => Math.round(a + f * (stops[i + 1][k] - a)));
  return `rgb(${c[0]},${c[1]},${c[2]})`;
}

function draw() {
  if (!demo) return;
  const coords = demo.triangle_coords();
  const field = controls.field.value;
  let values;
  try {
    values = demo.triangle_values(field);
  } catch (e) {
    stats.textContent = `error: ${e}`;
    return;
  }
  const n = values.length;
  // bounding box
  let xmin = Infinity, xmax = -Infinity, ymin = Infinity, ymax = -Infinity;
  for (let i = 0; i < coords.length; i += 2) {
    xmin = Math.min(xmin, coords[i]); xmax = Math.max(xmax, coords[i]);
    ymin = Math.min(ymin, coords[i + 1]); ymax = Math.max(ymax, coords[i + 1]);
  }
  const pad = 12;
  const sx = (canvas.width - 2 * pad) / (xmax - xmin);
  const sy = (canvas.height - 2 * pad) / (ymax - ymin);
  const s = Math.min(sx, sy);
  const px = (x) => pad + (x - xmin) * s;
  const py = (y) => canvas.height - pad - (y - ymin) * s;

  // indicator fields span orders of magnitude: log color scale when positive
  const positives = values.filter((v) => v > 0);
  const useLog = field === "eta" && positives.length > 0;
  let lo, hi;
  if (useLog) {
    lo = Math.log10(Math.min(...positives));
    hi = Math.log10(Math.max(...positives));
  } else {
    lo = Math.min(...values);
    hi = Math.max(...values);
  }
  const span = hi - lo || 1;
  const scale = (v) => {
    const x = useLog ? (v > 0 ? Math.log10(v) : lo) : v;
    return (x - lo) / span;
  };

  ctx.clearRect(0, 0, canvas.width, canvas.height);
  for (let e = 0; e < n; e++) {
    ctx.beginPath();
    ctx.moveTo(px(coords[6 * e]), py(coords[6 * e + 1]));
    ctx.lineTo(px(coords[6 * e + 2]), py(coords[6 * e + 3]));
    ctx.lineTo(px(coords[6 * e + 4]), py(coords[6 * e + 5]));
    ctx.closePath();
    ctx.fillStyle = viridis(scale(values[e]));
    ctx.fill();
    ctx.strokeStyle = "rgba(255,255,255,0.35)";
    ctx.lineWidth = 0.5;
    ctx.stroke();
  }
  if (controls.showmarked.checked) {
    const marked = demo.marked_elements();
    ctx.strokeStyle = "#ff3030";
    ctx.lineWidth = 1.5;
    for (const e of marked) {
      ctx.beginPath();
      ctx.moveTo(px(coords[6 * e]), py(coords[6 * e + 1]));
      ctx.lineTo(px(coords[6 * e + 2]), py(coords[6 * e + 3]));
      ctx.lineTo(px(coords[6 * e + 4]), py(coords[6 * e + 5]));
      ctx.closePath();
      ctx.stroke();
    }
  }
  const info = JSON.parse(demo.stats_json());
  const err = Number.isFinite(info.error_a) ? info.error_a.toExponential(3) : "n/a";
  stats.textContent =
    `level ${info.level}   triangles ${info.triangles}   stress dofs ${info.stress_dofs}   ` +
    `total dofs ${info.total_dofs}\neta ${info.eta.toExponential(3)}   energy error ${err}   ` +
    `marked ${info.marked}`;
  legend.textContent = useLog
    ? `color: log10(${field}) from ${lo.toFixed(2)} to ${hi.toFixed(2)}`
    : `color: ${field} from ${lo.toExponential(2)} to ${hi.toExponential(2)}`;
}

function rebuild() {
  const theta = parseFloat(controls.theta.value);
  controls.thetaval.textContent = theta.toFixed(2);
  try {
    demo = new Demo(controls.problem.value, controls.space.value, theta);
    draw();
  } catch (e) {
    demo = null;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    stats.textContent = `error: ${e}`;
  }
}

function guarded(f) {
  return () => {
    if (!demo) return;
    try {
      f();
      draw();
    } catch (e) {
      stats.textContent = `error: ${e}`;
    }
  };
}

await init();
document.getElementById("adapt").addEventListener("click", guarded(() => demo.step_adaptive()));
document.getElementById("uniform").addEventListener("click", guarded(() => demo.step_uniform()));
document.getElementById("reset").addEventListener("click", rebuild);
controls.problem.addEventListener("change", rebuild);
controls.space.addEventListener("change", rebuild);
controls.field.addEventListener("change", () => draw());
controls.showmarked.addEventListener("change", () => draw());
controls.theta.addEventListener("input", guarded(() => {
  const theta = parseFloat(controls.theta.value);
  controls.thetaval.textContent = theta.toFixed(2);
  demo.set_theta(theta);
}));
rebuild();
