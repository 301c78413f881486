import init, { cluster_points, ecdf, analyze_comment } from "../pkg/threadscope_web.js";

const $ = (id) => document.getElementById(id);
const palette = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
let points = [];

function gauss() {
  const u = 1 - Math.random();
  return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * Math.random());
}

function drawScatter(labels) {
  const c = $("scatter"), g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  points.forEach(([x, y], i) => {
    const l = labels ? labels[i] : -1;
    g.fillStyle = l < 0 ? "#bbb" : palette[l % palette.length];
    g.beginPath();
    g.arc(x, y, 3.5, 0, 2 * Math.PI);
    g.fill();
  });
}

function recluster() {
  if (points.length < 2) {
    drawScatter(null);
    $("cluster-info").textContent = "";
    return;
  }
  try {
    const labels = cluster_points(Float64Array.from(points.flat()), 2, +$("mcs").value, +$("ms").value);
    drawScatter(labels);
    const k = new Set(labels.filter((l) => l >= 0)).size;
    const noise = labels.filter((l) => l < 0).length;
    $("cluster-info").textContent = `${points.length} points, ${k} clusters, ${noise} noise`;
  } catch (e) {
    $("cluster-info").textContent = String(e);
  }
}

function drawEcdf() {
  const raw = $("values").value.split(/[\s,]+/).filter(Boolean).map(Number);
  const flat = ecdf(Float64Array.from(raw));
  const c = $("ecdf"), g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  if (flat.length === 0) return;
  const pad = 30, w = c.width - 2 * pad, h = c.height - 2 * pad;
  const xs = flat.filter((_, i) => i % 2 === 0);
  const lo = xs[0], hi = xs[xs.length - 1], span = hi - lo || 1;
  const px = (x) => pad + ((x - lo) / span) * w;
  const py = (f) => pad + (1 - f) * h;
  g.strokeStyle = "#999";
  g.strokeRect(pad, pad, w, h);
  g.fillStyle = "#555";
  g.fillText(String(lo), pad, c.height - 10);
  g.fillText(String(hi), pad + w - 20, c.height - 10);
  g.fillText("1", 10, pad + 4);
  g.fillText("0", 10, pad + h);
  g.strokeStyle = palette[0];
  g.lineWidth = 2;
  g.beginPath();
  g.moveTo(px(lo), py(0));
  let prev = 0;
  for (let i = 0; i < flat.length; i += 2) {
    const x = px(flat[i]);
    g.lineTo(x, py(prev));
    g.lineTo(x, py(flat[i + 1]));
    prev = flat[i + 1];
  }
  g.stroke();
}

function runAnalysis() {
  const a = JSON.parse(analyze_comment($("comment").value));
  const fired = a.votes.filter((v) => v.vote !== "Abstain").map((v) => `${v.function_id}: ${v.vote}`);
  $("analysis").textContent = [
    `p(irrelevant)    ${a.p_irrelevant.toFixed(3)}`,
    `sentiment        ${a.sentiment.label} (${a.sentiment.score.toFixed(3)})`,
    `emotion          ${a.emotion.label}`,
    `explicit marker  ${a.explicit_marker ? a.explicit_marker.join(" / ") : "none"}`,
    `label functions  ${fired.length ? fired.join(", ") : "all abstain"}`,
  ].join("\n");
}

await init();
$("status").textContent = "ready";

$("scatter").addEventListener("click", (ev) => {
  const r = ev.target.getBoundingClientRect();
  points.push([ev.clientX - r.left, ev.clientY - r.top]);
  recluster();
});
$("blobs").addEventListener("click", () => {
  const c = $("scatter");
  for (let k = 0; k < 3; k++) {
    const cx = 80 + Math.random() * (c.width - 160), cy = 60 + Math.random() * (c.height - 120);
    for (let i = 0; i < 25; i++) points.push([cx + 18 * gauss(), cy + 18 * gauss()]);
  }
  for (let i = 0; i < 8; i++) points.push([Math.random() * c.width, Math.random() * c.height]);
  recluster();
});
$("clear").addEventListener("click", () => { points = []; recluster(); });
$("mcs").addEventListener("change", recluster);
$("ms").addEventListener("change", recluster);
$("plot").addEventListener("click", drawEcdf);
$("analyze").addEventListener("click", runAnalysis);
drawEcdf();
runAnalysis();
