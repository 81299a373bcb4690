import init, { twirl_heatmap, fidelity_sweep, compression_explorer } from "./pkg/cni_web.js";

const status = document.getElementById("status");
const colors = { plain: "#8a8f99", srse: "#d9822b", cni: "#2b6cd9" };

function report(err) {
  status.textContent = String(err);
  status.className = "error";
}

function formValues(form) {
  return Object.fromEntries(new FormData(form).entries());
}

function drawMatrix(canvas, matrix) {
  const ctx = canvas.getContext("2d");
  const n = matrix.length;
  const cell = canvas.width / n;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  for (let r = 0; r < n; r++) {
    for (let c = 0; c < n; c++) {
      const v = Math.max(-1, Math.min(1, matrix[r][c]));
      const shade = Math.round(255 * (1 - Math.abs(v)));
      ctx.fillStyle = v >= 0 ? `rgb(${shade},${shade},255)` : `rgb(255,${shade},${shade})`;
      ctx.fillRect(c * cell, r * cell, cell, cell);
    }
  }
}

function runTwirl(event) {
  event?.preventDefault();
  const v = formValues(document.getElementById("twirl-form"));
  try {
    const view = JSON.parse(twirl_heatmap(Number(v.qubits), v.set, Number(v.seed)));
    drawMatrix(document.getElementById("ptm-original"), view.original);
    drawMatrix(document.getElementById("ptm-twirled"), view.twirled);
    document.getElementById("twirl-caption").textContent =
      `Twirled PTM (propagable through measurement: ${view.propagable})`;
  } catch (err) {
    report(err);
  }
}

function svgElement(name, attrs) {
  const el = document.createElementNS("http://www.w3.org/2000/svg", name);
  for (const [k, val] of Object.entries(attrs)) el.setAttribute(k, val);
  return el;
}

function plotSweep(points) {
  const svg = document.getElementById("sweep-plot");
  svg.replaceChildren();
  const width = Number(svg.getAttribute("width"));
  const height = Number(svg.getAttribute("height"));
  const pad = 40;
  const ps = points.map((q) => q.p);
  const lo = Math.min(...points.map((q) => q.mean - q.std), 0.5);
  const hi = Math.max(...points.map((q) => q.mean + q.std), 1.1);
  const pmax = Math.max(...ps) || 1;
  const x = (p) => pad + (p / pmax) * (width - 2 * pad);
  const y = (v) => height - pad - ((v - lo) / (hi - lo)) * (height - 2 * pad);
  svg.append(svgElement("line", { x1: pad, x2: width - pad, y1: y(1), y2: y(1), stroke: "#aaa", "stroke-dasharray": "4 4" }));
  svg.append(svgElement("line", { x1: pad, x2: pad, y1: pad, y2: height - pad, stroke: "#444" }));
  svg.append(svgElement("line", { x1: pad, x2: width - pad, y1: height - pad, y2: height - pad, stroke: "#444" }));
  for (const v of [lo, 1, hi]) {
    const label = svgElement("text", { x: 4, y: y(v) + 4, "font-size": 11 });
    label.textContent = v.toFixed(2);
    svg.append(label);
  }
  const pLabel = svgElement("text", { x: width - pad, y: height - 10, "font-size": 11, "text-anchor": "end" });
  pLabel.textContent = `p up to ${pmax}`;
  svg.append(pLabel);
  let row = 0;
  for (const [method, color] of Object.entries(colors)) {
    const series = points.filter((q) => q.method === method);
    const path = series.map((q, i) => `${i ? "L" : "M"}${x(q.p)},${y(q.mean)}`).join(" ");
    svg.append(svgElement("path", { d: path, fill: "none", stroke: color, "stroke-width": 2 }));
    for (const q of series) {
      svg.append(svgElement("line", { x1: x(q.p), x2: x(q.p), y1: y(q.mean - q.std), y2: y(q.mean + q.std), stroke: color }));
      svg.append(svgElement("circle", { cx: x(q.p), cy: y(q.mean), r: 3, fill: color }));
    }
    const legend = svgElement("text", { x: width - pad - 60, y: pad + 14 * row++, fill: color, "font-size": 12 });
    legend.textContent = method;
    svg.append(legend);
  }
}

function runSweep(event) {
  event?.preventDefault();
  const v = formValues(document.getElementById("sweep-form"));
  status.textContent = "Running sweep...";
  status.className = "";
  setTimeout(() => {
    try {
      const t0 = performance.now();
      const points = JSON.parse(
        fidelity_sweep(Number(v.qubits), v.noise, Number(v.pmax), Number(v.points), Number(v.m), Number(v.reps), Number(v.seed)),
      );
      plotSweep(points);
      status.textContent = `Sweep finished in ${((performance.now() - t0) / 1000).toFixed(1)} s.`;
    } catch (err) {
      report(err);
    }
  }, 0);
}

function runCompress(event) {
  event?.preventDefault();
  const v = formValues(document.getElementById("compress-form"));
  try {
    const view = JSON.parse(compression_explorer(Number(v.qubits), Number(v.p), Number(v.seed)));
    const body = document.querySelector("#compress-table tbody");
    body.replaceChildren(
      ...view.sites.map((s) => {
        const tr = document.createElement("tr");
        for (const cell of [s.gate_index, s.terms, s.gamma.toFixed(4), s.terms_compressed, s.gamma_compressed.toFixed(4)]) {
          const td = document.createElement("td");
          td.textContent = cell;
          tr.append(td);
        }
        return tr;
      }),
    );
    document.getElementById("compress-summary").textContent =
      `${view.cnots} CNOTs; total gamma ${view.gamma.toFixed(4)} -> ${view.gamma_compressed.toFixed(4)} after compression`;
    document.getElementById("compress-circuit").textContent = view.circuit;
  } catch (err) {
    report(err);
  }
}

init()
  .then(() => {
    status.textContent = "Ready.";
    document.getElementById("twirl-form").addEventListener("submit", runTwirl);
    document.getElementById("sweep-form").addEventListener("submit", runSweep);
    document.getElementById("compress-form").addEventListener("submit", runCompress);
    runTwirl();
    runCompress();
  })
  .catch(report);
