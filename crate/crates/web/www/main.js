import init, { spectrum, weyl_curve, roundtrip } from "./pkg/isp_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

function model() {
  return [num("order"), $("preset").value, num("grid")];
}

function status(text, isError = false) {
  $("status").textContent = text;
  $("status").className = isError ? "error" : "";
}

// series: [{points: [[x, y] | null], color, dots}]
function plot(canvas, series) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const all = series.flatMap((s) => s.points.filter((p) => p && isFinite(p[1])));
  if (all.length === 0) return;
  let [x0, x1] = [Math.min(...all.map((p) => p[0])), Math.max(...all.map((p) => p[0]))];
  let [y0, y1] = [Math.min(...all.map((p) => p[1])), Math.max(...all.map((p) => p[1]))];
  if (x1 === x0) { x0 -= 1; x1 += 1; }
  if (y1 === y0) { y0 -= 1; y1 += 1; }
  const pad = 30;
  const sx = (x) => pad + ((x - x0) / (x1 - x0)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - y0) / (y1 - y0)) * (h - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, sy(Math.min(Math.max(0, y0), y1)));
  ctx.lineTo(w - pad, sy(Math.min(Math.max(0, y0), y1)));
  ctx.stroke();
  ctx.fillStyle = "#555";
  ctx.fillText(y1.toPrecision(4), 2, pad - 8);
  ctx.fillText(y0.toPrecision(4), 2, h - 8);
  ctx.fillText(x0.toPrecision(4), pad, h - 8);
  ctx.fillText(x1.toPrecision(4), w - pad - 40, h - 8);

  for (const s of series) {
    ctx.strokeStyle = ctx.fillStyle = s.color;
    if (s.dots) {
      for (const p of s.points) {
        if (!p) continue;
        ctx.beginPath();
        ctx.arc(sx(p[0]), sy(p[1]), 3, 0, 2 * Math.PI);
        ctx.fill();
      }
      continue;
    }
    ctx.beginPath();
    let pen = false;
    for (const p of s.points) {
      if (!p || !isFinite(p[1])) { pen = false; continue; }
      pen ? ctx.lineTo(sx(p[0]), sy(p[1])) : ctx.moveTo(sx(p[0]), sy(p[1]));
      pen = true;
    }
    ctx.stroke();
  }
}

function guarded(label, f) {
  return () => {
    status(`${label}...`);
    // let the status line paint before the blocking call
    setTimeout(() => {
      const t = performance.now();
      try {
        f();
        status(`${label} done in ${((performance.now() - t) / 1000).toFixed(2)} s`);
      } catch (e) {
        status(`${label} failed: ${e.message ?? e}`, true);
      }
    }, 10);
  };
}

function runSpectrum() {
  const rows = JSON.parse(spectrum(...model(), num("count")));
  const n = num("order");
  const series = [];
  for (let k = 1; k < n; k++) {
    series.push({
      color: COLORS[k - 1],
      dots: true,
      points: rows.filter((r) => r.k === k).map((r) => [r.lambda[0], r.lambda[1]]),
    });
  }
  plot($("spectrum-plot"), series);
  $("spectrum-out").textContent = rows
    .map((r) => `k=${r.k} l=${r.l}  lambda=${r.lambda[0].toFixed(6)}${r.lambda[1] >= 0 ? "+" : ""}${r.lambda[1].toExponential(2)}i  beta=${r.beta[0].toFixed(4)}`)
    .join("\n");
}

function runWeyl() {
  const pts = JSON.parse(
    weyl_curve(...model(), num("wrow"), num("wcol"), num("t0"), num("t1"), num("offset"), 300)
  );
  plot($("weyl-plot"), [
    { color: COLORS[0], points: pts.map((p) => p.m && [p.t, p.m[0]]) },
    { color: COLORS[1], points: pts.map((p) => p.m && [p.t, p.m[1]]) },
  ]);
}

function runRoundtrip() {
  const r = JSON.parse(roundtrip(...model(), num("count"), num("levels"), num("mag"), num("seed")));
  const series = [];
  r.coefficients.forEach((c, i) => {
    series.push({ color: COLORS[i], points: r.x.map((x, j) => [x, c.recovered[j] - c.model[j]]) });
  });
  plot($("roundtrip-plot"), series);
  $("roundtrip-out").textContent = [
    `Omega = ${r.omega.toExponential(3)}   smallest singular value = ${r.sv_min.toFixed(4)}`,
    `max relative discrepancy: lambda ${r.max_rel_lambda.toExponential(2)}, beta ${r.max_rel_beta.toExponential(2)}`,
    ...r.coefficients.map((c, i) => `${c.name}: distance to model ${r.errors[i].toExponential(3)} (plotted: recovered - model)`),
  ].join("\n");
}

await init();
$("run-spectrum").onclick = guarded("spectrum", runSpectrum);
$("run-weyl").onclick = guarded("Weyl curve", runWeyl);
$("run-roundtrip").onclick = guarded("round trip", runRoundtrip);
status("ready");
