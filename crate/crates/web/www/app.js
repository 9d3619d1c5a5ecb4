import init, { fly, propulsion_curve, noise_schedule } from "./pkg/lyapgdm_web.js";

const $ = (id) => document.getElementById(id);
const BUDGET = 140;

function frame(ctx, xs, ys, pad = 30) {
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  const w = ctx.canvas.width - 2 * pad, h = ctx.canvas.height - 2 * pad;
  return {
    x: (v) => pad + (x1 > x0 ? (v - x0) / (x1 - x0) : 0.5) * w,
    y: (v) => pad + h - (y1 > y0 ? (v - y0) / (y1 - y0) : 0.5) * h,
  };
}

function polyline(ctx, f, xs, ys, color) {
  ctx.strokeStyle = color;
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(f.x(x), f.y(ys[i])) : ctx.moveTo(f.x(x), f.y(ys[i]))));
  ctx.stroke();
}

function clear(ctx) {
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
}

function drawFlight(f) {
  const map = $("map").getContext("2d");
  clear(map);
  const xs = Array.from(f.xs()), ys = Array.from(f.ys()), dev = Array.from(f.devices());
  const dx = dev.filter((_, i) => i % 2 === 0), dy = dev.filter((_, i) => i % 2 === 1);
  const fr = frame(map, [...xs, ...dx], [...ys, ...dy]);
  polyline(map, fr, xs, ys, "#1f77b4");
  map.fillStyle = "#d62728";
  dx.forEach((x, i) => map.fillRect(fr.x(x) - 4, fr.y(dy[i]) - 4, 8, 8));

  const s = $("series").getContext("2d");
  clear(s);
  const energy = Array.from(f.energy());
  const t = energy.map((_, i) => i + 1);
  const fe = frame(s, t, [...energy, BUDGET, 0]);
  polyline(s, fe, t, energy, "#2ca02c");
  polyline(s, fe, [1, t.length], [BUDGET, BUDGET], "#999");

  $("summary").textContent =
    `mean rate   ${f.mean_rate().toFixed(3)} Mbps\n` +
    `mean energy ${f.mean_energy().toFixed(2)} J (budget ${BUDGET})\n` +
    `final queue ${f.final_queue().toFixed(3)}`;
}

function report(e) {
  $("summary").textContent = String(e.message ?? e);
}

await init();

$("fly").onclick = () => {
  try {
    drawFlight(fly($("policy").value, +$("bw").value, +$("vw").value, BigInt($("seed").value || 0)));
  } catch (e) {
    report(e);
  }
};

$("power").onclick = () => {
  try {
    const vmax = +$("vmax").value, n = 121;
    const p = Array.from(propulsion_curve(vmax, n));
    const v = p.map((_, i) => (vmax * i) / (n - 1));
    const ctx = $("power-plot").getContext("2d");
    clear(ctx);
    const fr = frame(ctx, v, [...p, BUDGET, 0]);
    polyline(ctx, fr, v, p, "#9467bd");
    polyline(ctx, fr, [0, vmax], [BUDGET, BUDGET], "#999");
  } catch (e) {
    report(e);
  }
};

$("schedule").onclick = () => {
  try {
    const ab = noise_schedule(+$("steps").value, +$("bmin").value, +$("bmax").value);
    $("schedule-out").textContent = Array.from(ab)
      .map((a, k) => `k=${k + 1}  ᾱ=${a.toFixed(5)}  signal ${Math.sqrt(a).toFixed(4)}  noise ${Math.sqrt(1 - a).toFixed(4)}`)
      .join("\n");
  } catch (e) {
    $("schedule-out").textContent = String(e.message ?? e);
  }
};

$("fly").click();
$("power").click();
$("schedule").click();
