/* Minimal raw-frame -> H.264/mp4 encoder.
 *
 * Usage: h264enc WIDTH HEIGHT FPS CRF OUT.mp4
 * Reads packed RGB24 frames (width*height*3 bytes each) from stdin until EOF
 * and writes an H.264 stream at the requested constant rate factor.
 */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include <libavcodec/avcodec.h>
#include <libavformat/avformat.h>
#include <libavutil/opt.h>
#include <libavutil/imgutils.h>
#include <libswscale/swscale.h>

static void die(const char *msg, int err)
{
    char buf[256] = "";
    if (err < 0)
        av_strerror(err, buf, sizeof buf);
    fprintf(stderr, "h264enc: %s%s%s\n", msg, err < 0 ? ": " : "", buf);
    exit(1);
}

static void drain(AVFormatContext *fmt, AVCodecContext *enc, AVStream *st,
                  AVFrame *frame)
{
    int ret = avcodec_send_frame(enc, frame);
    if (ret < 0)
        die("send_frame", ret);
    AVPacket *pkt = av_packet_alloc();
    for (;;) {
        ret = avcodec_receive_packet(enc, pkt);
        if (ret == AVERROR(EAGAIN) || ret == AVERROR_EOF)
            break;
        if (ret < 0)
            die("receive_packet", ret);
        pkt->duration = 1; /* in encoder time base; demuxers drop duration-less tails */
        av_packet_rescale_ts(pkt, enc->time_base, st->time_base);
        pkt->stream_index = st->index;
        ret = av_interleaved_write_frame(fmt, pkt);
        if (ret < 0)
            die("write_frame", ret);
    }
    av_packet_free(&pkt);
}

int main(int argc, char **argv)
{
    if (argc != 6) {
        fprintf(stderr, "usage: h264enc WIDTH HEIGHT FPS CRF OUT.mp4\n");
        return 2;
    }
    int width = atoi(argv[1]), height = atoi(argv[2]);
    int fps = atoi(argv[3]), crf = atoi(argv[4]);
    const char *out = argv[5];
    if (width <= 0 || height <= 0 || fps <= 0 || crf < 0 || crf > 51)
        die("bad arguments", 0);

    const AVCodec *codec = avcodec_find_encoder_by_name("libx264");
    if (!codec)
        die("libx264 encoder not available", 0);

    AVFormatContext *fmt = NULL;
    int ret = avformat_alloc_output_context2(&fmt, NULL, "mp4", out);
    if (ret < 0)
        die("alloc output", ret);

    AVCodecContext *enc = avcodec_alloc_context3(codec);
    enc->width = width;
    enc->height = height;
    enc->time_base = (AVRational){1, fps};
    enc->framerate = (AVRational){fps, 1};
    enc->pix_fmt = AV_PIX_FMT_YUV420P;
    enc->max_b_frames = 0; /* keeps pts == dts, so every frame survives remux */
    if (fmt->oformat->flags & AVFMT_GLOBALHEADER)
        enc->flags |= AV_CODEC_FLAG_GLOBAL_HEADER;
    av_opt_set_int(enc->priv_data, "crf", crf, 0);
    av_opt_set(enc->priv_data, "preset", "medium", 0);
    ret = avcodec_open2(enc, codec, NULL);
    if (ret < 0)
        die("open encoder", ret);

    AVStream *st = avformat_new_stream(fmt, NULL);
    st->time_base = enc->time_base;
    avcodec_parameters_from_context(st->codecpar, enc);

    ret = avio_open(&fmt->pb, out, AVIO_FLAG_WRITE);
    if (ret < 0)
        die("open output file", ret);
    ret = avformat_write_header(fmt, NULL);
    if (ret < 0)
        die("write header", ret);

    struct SwsContext *sws = sws_getContext(width, height, AV_PIX_FMT_RGB24,
                                            width, height, AV_PIX_FMT_YUV420P,
                                            SWS_BILINEAR, NULL, NULL, NULL);
    AVFrame *yuv = av_frame_alloc();
    yuv->format = AV_PIX_FMT_YUV420P;
    yuv->width = width;
    yuv->height = height;
    av_frame_get_buffer(yuv, 0);

    size_t frame_bytes = (size_t)width * height * 3;
    uint8_t *rgb = malloc(frame_bytes);
    const uint8_t *planes[1] = {rgb};
    int strides[1] = {width * 3};
    int64_t pts = 0;
    for (;;) {
        size_t got = fread(rgb, 1, frame_bytes, stdin);
        if (got == 0)
            break;
        if (got != frame_bytes)
            die("truncated frame on stdin", 0);
        av_frame_make_writable(yuv);
        sws_scale(sws, planes, strides, 0, height, yuv->data, yuv->linesize);
        yuv->pts = pts++;
        drain(fmt, enc, st, yuv);
    }
    drain(fmt, enc, st, NULL); /* flush */

    av_write_trailer(fmt);
    avio_closep(&fmt->pb);
    sws_freeContext(sws);
    av_frame_free(&yuv);
    avcodec_free_context(&enc);
    avformat_free_context(fmt);
    free(rgb);
    return 0;
}
