// Minimal polyline charts for drive and koncept traces.

import type { SeriesBuffer } from "./viewmodel";

export interface ChartSeries {
    label: string;
    color: string;
    buffer: SeriesBuffer;
}

export function drawChart(
    ctx: CanvasRenderingContext2D,
    width: number,
    height: number,
    series: ChartSeries[],
    yMax = 1.0,
): void {
    ctx.fillStyle = "#0c0f15";
    ctx.fillRect(0, 0, width, height);
    ctx.strokeStyle = "#2a3242";
    ctx.strokeRect(0.5, 0.5, width - 1, height - 1);

    let tMin = Infinity;
    let tMax = -Infinity;
    for (const s of series) {
        if (s.buffer.length > 0) {
            tMin = Math.min(tMin, s.buffer.times[0]);
            tMax = Math.max(tMax, s.buffer.times[s.buffer.length - 1]);
        }
    }
    if (!isFinite(tMin) || tMax <= tMin) {
        return;
    }
    for (const s of series) {
        ctx.strokeStyle = s.color;
        ctx.lineWidth = 1.2;
        ctx.beginPath();
        for (let i = 0; i < s.buffer.length; i++) {
            const x = ((s.buffer.times[i] - tMin) / (tMax - tMin)) * (width - 8) + 4;
            const y = height - 4 - (Math.min(s.buffer.values[i], yMax) / yMax) * (height - 8);
            if (i === 0) {
                ctx.moveTo(x, y);
            } else {
                ctx.lineTo(x, y);
            }
        }
        ctx.stroke();
    }
    // legend
    let lx = 8;
    for (const s of series) {
        ctx.fillStyle = s.color;
        ctx.fillRect(lx, 6, 10, 3);
        ctx.fillStyle = "#aab4c4";
        ctx.font = "10px system-ui";
        ctx.fillText(s.label, lx + 14, 11);
        lx += 14 + ctx.measureText(s.label).width + 12;
    }
}
